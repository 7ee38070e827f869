"""Reader and writer for problem files (grammar in docs/format.md).

A problem file is a sequence of declarations::

    space K { block X seq; block Y seq; }
    kernel T : K -> L { row Z:0 = { Y:inf: 1 }; ... }

All numbers are exact rationals.  Syntax errors carry a line and column;
semantic checks of kernels and set maps are left to the validators.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .calculus import Fixed, Fn, Indexed, Meas, Target
from .kernels import Kernel, ResidueClass, Template
from .setmaps import SetMap, SetTemplate
from .spaces import INF, Block, Point, SpaceDesc, SubsetDesc, Trace


class FormatError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        super().__init__(f"{line}:{col}: {msg}" if line else msg)


SETTINGS = {"window": 2, "oracle": 5, "search_bound": 64, "seed": 0}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_@]*)
  | (?P<punct>->|\.\.|[{}\[\]();:,=*+\-])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    out = []
    line, start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormatError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind != "ws":
            out.append(Tok(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Tok("eof", "", line, pos - start + 1))
    return out


@dataclass
class ProblemFile:
    spaces: dict[str, SpaceDesc] = field(default_factory=dict)
    kernels: dict[str, tuple[str, str, Kernel]] = field(default_factory=dict)
    setmaps: dict[str, tuple[str, str, SetMap]] = field(default_factory=dict)
    functions: dict[str, tuple[str, Fn]] = field(default_factory=dict)
    measures: dict[str, tuple[str, Meas]] = field(default_factory=dict)
    settings: dict[str, int] = field(default_factory=dict)

    @property
    def kernel(self) -> Kernel:
        if not self.kernels:
            raise FormatError("no kernel declared")
        return next(iter(self.kernels.values()))[2]

    def setting(self, key: str) -> int:
        return self.settings.get(key, SETTINGS[key])


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.pf = ProblemFile()

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Tok | None = None) -> FormatError:
        tok = tok or self.tok
        return FormatError(msg, tok.line, tok.col)

    def next(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "ident") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            found = self.tok.text or "end of file"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.next()

    def ident(self) -> Tok:
        if self.tok.kind != "ident":
            raise self.error(f"expected a name, found {self.tok.text or 'end of file'!r}")
        return self.next()

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or "/" in t.text:
            raise self.error(f"expected an integer, found {t.text or 'end of file'!r}")
        self.i += 1
        return int(t.text)

    def signed_integer(self) -> int:
        neg = self.accept("-")
        return -self.integer() if neg else self.integer()

    def rational(self) -> Fraction:
        neg = self.accept("-")
        if not neg:
            self.accept("+")
        t = self.tok
        if t.kind != "num":
            raise self.error(f"expected a number, found {t.text or 'end of file'!r}")
        self.i += 1
        try:
            v = Fraction(t.text)
        except ZeroDivisionError:
            raise self.error("zero denominator", t) from None
        return -v if neg else v

    # entry
    def parse(self) -> ProblemFile:
        while self.tok.kind != "eof":
            t = self.ident()
            handler = {"space": self.space, "kernel": self.kernel, "setmap": self.setmap,
                       "fn": self.function, "meas": self.measure, "settings": self.settings}.get(t.text)
            if handler is None:
                raise self.error(f"unknown declaration {t.text!r}", t)
            handler()
        if not self.pf.spaces:
            raise FormatError("no spaces declared", self.tok.line, self.tok.col)
        return self.pf

    def new_name(self, table: dict, kind: str) -> str:
        t = self.ident()
        if t.text in table:
            raise self.error(f"duplicate {kind} {t.text!r}", t)
        return t.text

    def space_ref(self) -> tuple[str, SpaceDesc]:
        t = self.ident()
        if t.text not in self.pf.spaces:
            raise self.error(f"unknown space {t.text!r}", t)
        return t.text, self.pf.spaces[t.text]

    # declarations
    def space(self) -> None:
        name = self.new_name(self.pf.spaces, "space")
        self.expect("{")
        blocks = []
        while not self.accept("}"):
            self.expect("block")
            bid = self.ident()
            if any(b.id == bid.text for b in blocks):
                raise self.error(f"duplicate block {bid.text!r}", bid)
            kind = self.ident()
            if kind.text == "seq":
                blocks.append(Block(bid.text, "seq"))
            elif kind.text == "fin":
                blocks.append(Block(bid.text, "fin", self.integer()))
            else:
                raise self.error(f"unknown block kind {kind.text!r}", kind)
            self.expect(";")
        self.pf.spaces[name] = SpaceDesc(tuple(blocks))

    def block_of(self, s: SpaceDesc, t: Tok) -> None:
        if not s.has_block(t.text):
            raise self.error(f"unknown block {t.text!r}", t)

    def point(self, s: SpaceDesc) -> Point:
        b = self.ident()
        self.block_of(s, b)
        self.expect(":")
        return Point(b.text, self.index())

    def index(self):
        if self.accept("inf"):
            return INF
        return self.integer()

    def target(self, s: SpaceDesc) -> Target:
        b = self.ident()
        self.block_of(s, b)
        if self.accept(":"):
            return Fixed(Point(b.text, self.index()))
        self.expect("[")
        a = 1
        if self.tok.kind == "num":
            a = self.integer()
            self.expect("*")
        self.expect("k")
        off = 0
        if self.at("+") or self.at("-"):
            sign = -1 if self.next().text == "-" else 1
            off = sign * self.integer()
        self.expect("]")
        if a < 1:
            raise self.error("indexed targets need a positive coefficient")
        return Indexed(b.text, a, off)

    def residue_class(self) -> ResidueClass:
        self.expect("mod")
        d = self.integer()
        self.expect("rem")
        r = self.integer()
        self.expect("from")
        k0 = self.integer()
        if d < 1 or not 0 <= r < d:
            raise self.error(f"bad residue class mod {d} rem {r}")
        return ResidueClass(d, r, k0)

    def weighted_targets(self, s: SpaceDesc) -> list[tuple[Target, Fraction]]:
        self.expect("{")
        out = []
        while not self.accept("}"):
            tg = self.target(s)
            self.expect(":")
            out.append((tg, self.rational()))
            if not self.accept(","):
                self.expect("}")
                break
        return out

    def targets(self, s: SpaceDesc) -> list[Target]:
        self.expect("{")
        out = []
        while not self.accept("}"):
            out.append(self.target(s))
            if not self.accept(","):
                self.expect("}")
                break
        return out

    def fixed_atoms(self, s: SpaceDesc, atoms, where: Tok) -> dict[Point, Fraction]:
        out: dict[Point, Fraction] = {}
        for tg, w in atoms:
            if not isinstance(tg, Fixed):
                raise self.error("a measure atom must be a point, not an indexed target", where)
            out[tg.point] = out.get(tg.point, Fraction(0)) + w
        return out

    def kernel(self) -> None:
        name = self.new_name(self.pf.kernels, "kernel")
        self.expect(":")
        kn, K = self.space_ref()
        self.expect("->")
        ln, L = self.space_ref()
        self.expect("{")
        rows: dict[Point, Meas] = {}
        temps: dict[str, list[Template]] = {}
        while not self.accept("}"):
            t = self.ident()
            if t.text == "row":
                y = self.point(L)
                if y in rows:
                    raise self.error(f"duplicate row {y}", t)
                self.expect("=")
                rows[y] = Meas(K, self.fixed_atoms(K, self.weighted_targets(K), t))
            elif t.text == "template":
                b = self.ident()
                self.block_of(L, b)
                cls = self.residue_class()
                self.expect("=")
                temps.setdefault(b.text, []).append(Template(cls, self.weighted_targets(K)))
            else:
                raise self.error(f"expected 'row' or 'template', found {t.text!r}", t)
            self.expect(";")
        self.pf.kernels[name] = (kn, ln, Kernel(K, L, rows, temps))

    def setmap(self) -> None:
        name = self.new_name(self.pf.setmaps, "setmap")
        self.expect(":")
        ln, L = self.space_ref()
        self.expect("->")
        kn, K = self.space_ref()
        self.expect("bound")
        bound = self.integer()
        self.expect("{")
        values: dict[Point, list[Point]] = {}
        temps: dict[str, list[SetTemplate]] = {}
        while not self.accept("}"):
            t = self.ident()
            if t.text == "value":
                y = self.point(L)
                self.expect("=")
                tgs = self.targets(K)
                if any(not isinstance(x, Fixed) for x in tgs):
                    raise self.error("a value must list points, not indexed targets", t)
                values[y] = [x.point for x in tgs]
            elif t.text == "template":
                b = self.ident()
                self.block_of(L, b)
                cls = self.residue_class()
                self.expect("=")
                temps.setdefault(b.text, []).append(SetTemplate(cls, self.targets(K)))
            else:
                raise self.error(f"expected 'value' or 'template', found {t.text!r}", t)
            self.expect(";")
        self.pf.setmaps[name] = (ln, kn, SetMap(L, K, bound, values, temps))

    def function(self) -> None:
        name = self.new_name(self.pf.functions, "function")
        self.expect("on")
        sn, s = self.space_ref()
        self.expect("{")
        data = {}
        while not self.accept("}"):
            b = self.ident()
            self.block_of(s, b)
            self.expect(":")
            if s.block(b.text).is_seq:
                self.expect("tail")
                tail = self.rational()
                exc = self.index_map() if self.accept("except") else {}
                data[b.text] = (tail, exc)
            else:
                self.expect("values")
                vals = self.index_map()
                if any(i >= s.block(b.text).size for i in vals):
                    raise self.error(f"index outside finite block {b.text!r}", b)
                data[b.text] = vals
            self.expect(";")
        self.pf.functions[name] = (sn, Fn(s, data))

    def index_map(self) -> dict[int, Fraction]:
        self.expect("{")
        out = {}
        while not self.accept("}"):
            i = self.integer()
            self.expect(":")
            out[i] = self.rational()
            if not self.accept(","):
                self.expect("}")
                break
        return out

    def measure(self) -> None:
        name = self.new_name(self.pf.measures, "measure")
        self.expect("on")
        sn, s = self.space_ref()
        self.expect("=")
        where = self.tok
        atoms = self.fixed_atoms(s, self.weighted_targets(s), where)
        self.expect(";")
        self.pf.measures[name] = (sn, Meas(s, atoms))

    def settings(self) -> None:
        self.expect("{")
        while not self.accept("}"):
            t = self.ident()
            if t.text not in SETTINGS:
                raise self.error(f"unknown setting {t.text!r}", t)
            self.pf.settings[t.text] = self.integer()
            self.expect(";")

    def subset(self, s: SpaceDesc) -> SubsetDesc:
        self.expect("{")
        traces = {}
        while not self.accept("}"):
            b = self.ident()
            self.block_of(s, b)
            self.expect(":")
            traces[b.text] = traces.get(b.text, Trace()) | self.trace()
            if not self.accept(";"):
                self.expect("}")
                break
        return SubsetDesc.from_traces(s, traces)

    def trace(self) -> Trace:
        tr = Trace()
        while True:
            if self.accept("inf"):
                tr = tr | Trace.points([INF])
            elif self.accept("mod"):
                P = self.integer()
                self.expect("=")
                res = [self.integer()]
                while self.tok.kind == "num":
                    res.append(self.integer())
                self.expect("from")
                start = self.integer()
                if P < 1:
                    raise self.error("period must be positive")
                tr = tr | Trace.make((), start, P, res)
            else:
                n = self.integer()
                tr = tr | (Trace.tail(n, inf=False) if self.accept("..") else Trace.points([n]))
            if not self.accept(","):
                return tr


def parse(text: str) -> ProblemFile:
    return Parser(text).parse()


def parse_subset(text: str, s: SpaceDesc) -> SubsetDesc:
    p = Parser(text)
    out = p.subset(s)
    if p.tok.kind != "eof":
        raise p.error(f"trailing input {p.tok.text!r}")
    return out


# -- serialization -------------------------------------------------------------


def fmt_index(i) -> str:
    return "inf" if i == INF else str(i)


def fmt_point(p: Point) -> str:
    return f"{p.block}:{fmt_index(p.index)}"


def fmt_atoms(atoms) -> str:
    inner = ", ".join(f"{tg}: {w}" for tg, w in atoms)
    return "{ " + inner + " }" if inner else "{ }"


def fmt_targets(targets) -> str:
    inner = ", ".join(str(t) for t in targets)
    return "{ " + inner + " }" if inner else "{ }"


def fmt_subset(A: SubsetDesc) -> str:
    return str(A)


def serialize_space(name: str, s: SpaceDesc) -> str:
    parts = [f"block {b.id} seq;" if b.is_seq else f"block {b.id} fin {b.size};" for b in s.blocks]
    return f"space {name} {{ " + " ".join(parts) + " }\n"


def serialize_kernel(name: str, kn: str, ln: str, T: Kernel) -> str:
    lines = [f"kernel {name} : {kn} -> {ln} {{"]
    for y, mu in T.rows.items():
        lines.append(f"  row {fmt_point(y)} = {fmt_atoms(mu.atoms.items())};")
    for bid, ts in T.templates.items():
        for t in ts:
            c = t.cls
            lines.append(f"  template {bid} mod {c.d} rem {c.r} from {c.k0} = {fmt_atoms(t.atoms)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_setmap(name: str, ln: str, kn: str, phi: SetMap) -> str:
    lines = [f"setmap {name} : {ln} -> {kn} bound {phi.bound} {{"]
    for y, v in phi.values.items():
        lines.append(f"  value {fmt_point(y)} = {fmt_targets(sorted(v))};")
    for bid, ts in phi.templates.items():
        for t in ts:
            c = t.cls
            lines.append(f"  template {bid} mod {c.d} rem {c.r} from {c.k0} = {fmt_targets(t.targets)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_fn(name: str, sn: str, g: Fn) -> str:
    parts = []
    for b in g.space.blocks:
        exc = g.exceptions(b.id)
        body = ", ".join(f"{i}: {v}" for i, v in exc.items())
        if b.is_seq:
            s = f"{b.id}: tail {g.tail(b.id)}"
            if exc:
                s += f" except {{ {body} }}"
        else:
            s = f"{b.id}: values {{ {body} }}"
        parts.append(s + ";")
    return f"fn {name} on {sn} {{ " + " ".join(parts) + " }\n"


def serialize_meas(name: str, sn: str, mu: Meas) -> str:
    return f"meas {name} on {sn} = {fmt_atoms((fmt_point(p), w) for p, w in mu.atoms.items())};\n"


def serialize(pf: ProblemFile) -> str:
    chunks = [serialize_space(n, s) for n, s in pf.spaces.items()]
    chunks += [serialize_kernel(n, kn, ln, T) for n, (kn, ln, T) in pf.kernels.items()]
    chunks += [serialize_setmap(n, ln, kn, phi) for n, (ln, kn, phi) in pf.setmaps.items()]
    chunks += [serialize_fn(n, sn, g) for n, (sn, g) in pf.functions.items()]
    chunks += [serialize_meas(n, sn, mu) for n, (sn, mu) in pf.measures.items()]
    if pf.settings:
        body = " ".join(f"{k} {v};" for k, v in sorted(pf.settings.items()))
        chunks.append(f"settings {{ {body} }}\n")
    return "\n".join(chunks)


def problem_for(T: Kernel, kname: str = "T", kn: str = "K", ln: str = "L",
                settings: dict[str, int] | None = None) -> ProblemFile:
    """A problem file holding a single kernel; equal spaces share one name."""
    spaces = {kn: T.domain} if T.domain == T.codomain else {kn: T.domain, ln: T.codomain}
    ln = kn if T.domain == T.codomain else ln
    return ProblemFile(spaces, {kname: (kn, ln, T)}, settings=dict(settings or {}))
