"""Restricted co-safe LTL: parsing, DFA compilation and finite-trace semantics.

Supported shapes::

    F(s1 & F(s2 & ... F(sn)))                    sequential chain
    F(g1||g2 & F(g3))                            disjunctive stage goals
    F(...) & G(t -> X G(!u))                     trigger-safety clause

A stage ``si`` is a conjunction of disjunctions of atoms.  Precedence is
``!`` > ``||`` > ``&`` > ``->``.  The spelling ``G(t & X G(!u))`` is accepted
as a synonym of the trigger-response clause.

Traces are stutter-free sequences of label sets (one entry per region visit).
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property

from .errors import LtlSyntaxError, UnsupportedFragment

# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    operand: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually:
    operand: Formula


@dataclass(frozen=True)
class TriggerSafety:
    """Once ``trigger`` holds, ``forbidden`` must never hold at any later step."""
    trigger: Atom
    forbidden: Atom


# Parse-only nodes; never survive restriction to the supported fragment.
@dataclass(frozen=True)
class _Always:
    operand: object


@dataclass(frozen=True)
class _Next:
    operand: object


@dataclass(frozen=True)
class _Implies:
    left: object
    right: object


@dataclass(frozen=True)
class _Binary:
    op: str
    left: object
    right: object


Formula = Atom | Not | And | Or | Eventually | TriggerSafety

# -- tokenizer / parser -------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(->|=>|&&|\|\||[()&|!~])|([a-z][a-z0-9_]*)|([A-Z][A-Za-z]*))")
_UNARY_TEMPORAL = {"F", "G", "X"}
_BINARY_TEMPORAL = {"U", "R", "W", "M"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise LtlSyntaxError(f"unexpected character {text[start]!r}", start)
        start = m.start(m.lastindex)
        sym, atom, op = m.groups()
        if sym:
            sym = {"&&": "&", "|": "||", "=>": "->", "~": "!"}.get(sym, sym)
            tokens.append(("sym", sym, start))
        elif atom:
            if "_" in atom:
                raise LtlSyntaxError(f"bad atom name {atom!r}", start)
            tokens.append(("atom", atom, start))
        else:
            if op not in _UNARY_TEMPORAL | _BINARY_TEMPORAL:
                raise LtlSyntaxError(f"unknown operator {op!r}", start)
            tokens.append(("op", op, start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "atom":
            raise LtlSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self):
        node = self.implies()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise LtlSyntaxError(f"unexpected {val!r}", pos)
        return node

    def implies(self):
        left = self.binary_temporal()
        if self.peek()[1] == "->":
            self.take()
            return _Implies(left, self.implies())
        return left

    def binary_temporal(self):
        left = self.conj()
        while self.peek()[0] == "op" and self.peek()[1] in _BINARY_TEMPORAL:
            op = self.take()[1]
            left = _Binary(op, left, self.conj())
        return left

    def conj(self):
        left = self.disj()
        while self.peek()[:2] == ("sym", "&"):
            self.take()
            left = And(left, self.disj())
        return left

    def disj(self):
        left = self.unary()
        if self.peek()[:2] == ("sym", "||"):
            self.take()
            return Or(left, self.disj())
        return left

    def unary(self):
        kind, val, pos = self.peek()
        if (kind, val) == ("sym", "!"):
            self.take()
            return Not(self.unary())
        if kind == "op" and val in _UNARY_TEMPORAL:
            self.take()
            operand = self.unary()
            return {"F": Eventually, "G": _Always, "X": _Next}[val](operand)
        if (kind, val) == ("sym", "("):
            self.take()
            node = self.implies()
            self.expect(")")
            return node
        if kind == "atom":
            self.take()
            return Atom(val)
        raise LtlSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def _conjuncts(node) -> list:
    if isinstance(node, And):
        return _conjuncts(node.left) + _conjuncts(node.right)
    return [node]


def _disjuncts(node) -> list:
    if isinstance(node, Or):
        return _disjuncts(node.left) + _disjuncts(node.right)
    return [node]


def _build_and(terms):
    node = terms[-1]
    for t in reversed(terms[:-1]):
        node = And(t, node)
    return node


def _build_or(atoms):
    node = atoms[-1]
    for a in reversed(atoms[:-1]):
        node = Or(a, node)
    return node


def _restrict_seq(node):
    if not isinstance(node, Eventually):
        raise UnsupportedFragment("a task must be a chain of F(...) stages")
    goals, nxt = [], None
    for term in _conjuncts(node.operand):
        if isinstance(term, Eventually):
            if nxt is not None:
                raise UnsupportedFragment("a stage may contain at most one nested F(...)")
            nxt = _restrict_seq(term)
            continue
        lits = _disjuncts(term)
        if not all(isinstance(a, Atom) for a in lits):
            raise UnsupportedFragment("stage goals must be atoms joined by '||' and '&'")
        goals.append(_build_or(lits))
    if not goals:
        raise UnsupportedFragment("every F(...) stage needs at least one goal atom")
    return Eventually(_build_and(goals + ([nxt] if nxt is not None else [])))


def _restrict_safety(node):
    if isinstance(node, _Always) and isinstance(node.operand, (_Implies, And)):
        body = node.operand
        trig, resp = body.left, body.right
        if (isinstance(trig, Atom) and isinstance(resp, _Next)
                and isinstance(resp.operand, _Always)
                and isinstance(resp.operand.operand, Not)
                and isinstance(resp.operand.operand.operand, Atom)):
            return TriggerSafety(trig, resp.operand.operand.operand)
    raise UnsupportedFragment("only G(t -> X G(!u)) safety clauses are supported")


def _contains_unsupported(node) -> bool:
    if isinstance(node, _Binary):
        return True
    for child in vars(node).values():
        if not isinstance(child, str) and _contains_unsupported(child):
            return True
    return False


def parse_ltl(text: str) -> Formula:
    raw = _Parser(text).parse()
    if _contains_unsupported(raw):
        raise UnsupportedFragment("Until/Release operators are not supported")
    terms = _conjuncts(raw)
    seqs = [t for t in terms if isinstance(t, Eventually)]
    others = [t for t in terms if not isinstance(t, Eventually)]
    if len(seqs) != 1 or len(others) > 1:
        raise UnsupportedFragment("expected F(...) optionally conjoined with one safety clause")
    seq = _restrict_seq(seqs[0])
    if others:
        return And(seq, _restrict_safety(others[0]))
    return seq


# -- formula introspection and printing ---------------------------------------


def task_structure(f: Formula) -> tuple[list[tuple[tuple[str, ...], ...]], TriggerSafety | None]:
    """Split a supported formula into stage goals and an optional safety clause.

    Each stage is a tuple of clauses; a clause is a tuple of atoms, any of
    which satisfies it.  All clauses of a stage must hold at the same step.
    """
    safety = None
    if isinstance(f, And) and isinstance(f.right, TriggerSafety):
        f, safety = f.left, f.right
    stages = []
    node = f
    while node is not None:
        if not isinstance(node, Eventually):
            raise UnsupportedFragment(f"not a stage chain: {node!r}")
        clauses, nxt = [], None
        for term in _conjuncts(node.operand):
            if isinstance(term, Eventually):
                nxt = term
            else:
                clauses.append(tuple(a.name for a in _disjuncts(term)))
        stages.append(tuple(clauses))
        node = nxt
    return stages, safety


def formula_atoms(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, TriggerSafety):
        return {f.trigger.name, f.forbidden.name}
    out = set()
    for child in vars(f).values():
        out |= formula_atoms(child)
    return out


def format_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + format_formula(f.operand)
    if isinstance(f, Or):
        return f"{format_formula(f.left)}||{format_formula(f.right)}"
    if isinstance(f, And):
        return f"{format_formula(f.left)} & {format_formula(f.right)}"
    if isinstance(f, Eventually):
        return f"F({format_formula(f.operand)})"
    if isinstance(f, TriggerSafety):
        return f"G({f.trigger.name} -> X G(!{f.forbidden.name}))"
    raise TypeError(f"cannot format {f!r}")


# -- finite-trace semantics ----------------------------------------------------


def _evaluator(f):
    """Compile ``f`` into a function mapping a trace to its per-position truth values."""
    if isinstance(f, Atom):
        name = f.name
        return lambda tr: [name in lab for lab in tr]
    if isinstance(f, Not):
        inner = _evaluator(f.operand)
        return lambda tr: [not v for v in inner(tr)]
    if isinstance(f, (And, Or)):
        left, right = _evaluator(f.left), _evaluator(f.right)
        if isinstance(f, And):
            return lambda tr: [a and b for a, b in zip(left(tr), right(tr))]
        return lambda tr: [a or b for a, b in zip(left(tr), right(tr))]
    if isinstance(f, Eventually):
        inner = _evaluator(f.operand)

        def ev(tr):
            vals = inner(tr)
            acc = False
            for i in range(len(vals) - 1, -1, -1):
                acc = acc or vals[i]
                vals[i] = acc
            return vals
        return ev
    if isinstance(f, TriggerSafety):
        t, u = f.trigger.name, f.forbidden.name

        def safe(tr):
            # out[i]: after the first t at or after i, u never holds again
            n = len(tr)
            out = [True] * n
            u_later = False  # u somewhere strictly after the current index
            first_ok = True  # value for the most recent t seen scanning backwards
            for i in range(n - 1, -1, -1):
                if t in tr[i]:
                    first_ok = not u_later
                out[i] = first_ok
                u_later = u_later or u in tr[i]
            return out
        return safe
    raise TypeError(f"cannot evaluate {f!r}")


_EVAL_CACHE: dict = {}


def eval_finite_trace(f: Formula, trace) -> bool:
    """Finite-trace semantics at position 0; an empty trace satisfies no F(...)."""
    trace = [frozenset(lab) for lab in trace]
    if not trace:
        # Only vacuous safety clauses hold on the empty word.
        return isinstance(f, TriggerSafety)
    # keyed by identity because hashing a deep formula costs more than evaluating it;
    # the entry keeps ``f`` alive so the id cannot be reused
    hit = _EVAL_CACHE.get(id(f))
    if hit is None or hit[0] is not f:
        hit = _EVAL_CACHE[id(f)] = (f, _evaluator(f))
    return hit[1](trace)[0]


# -- DFA -------------------------------------------------------------------------


@dataclass(frozen=True)
class Guard:
    """Conjunction of clauses; each clause is a disjunction of ``(atom, positive)`` literals.

    The empty conjunction is ``true``.
    """
    clauses: tuple[tuple[tuple[str, bool], ...], ...] = ()

    def holds(self, label) -> bool:
        return all(any((a in label) == pos for a, pos in clause) for clause in self.clauses)

    def __and__(self, other: Guard) -> Guard:
        return Guard(self.clauses + tuple(c for c in other.clauses if c not in self.clauses))

    @property
    def positive_atoms(self) -> set[str]:
        return {a for clause in self.clauses for a, pos in clause if pos}

    def __str__(self):
        if not self.clauses:
            return "true"
        parts = []
        for clause in self.clauses:
            lits = [a if pos else "!" + a for a, pos in clause]
            parts.append(lits[0] if len(lits) == 1 else "(" + " | ".join(lits) + ")")
        return " & ".join(parts)


TRUE = Guard()


def _atom_guard(atom: str) -> Guard:
    return Guard((((atom, True),),))


@dataclass(frozen=True)
class Dfa:
    states: tuple[int, ...]
    initial: int
    accepting: frozenset[int]
    trap: int | None
    transitions: tuple[tuple[int, Guard, int], ...]
    alphabet: frozenset[str]
    # stage index reached by each state; the trap maps to -1
    progress: tuple[int, ...]

    @cached_property
    def outgoing(self) -> dict[int, tuple[tuple[Guard, int], ...]]:
        out = {s: [] for s in self.states}
        for src, g, dst in self.transitions:
            out[src].append((g, dst))
        return {s: tuple(v) for s, v in out.items()}

    @cached_property
    def _step_memo(self) -> dict:
        # (state, label restricted to the alphabet) -> successor; guards only mention alphabet atoms
        return {}

    def name(self, s: int) -> str:
        return "trap" if s == self.trap else f"q{s}"

    def firing(self, s: int, label) -> tuple[Guard, int]:
        for g, dst in self.outgoing[s]:
            if g.holds(label):
                return g, dst
        raise AssertionError(f"DFA state {s} is not total")


def compile_dfa(f: Formula) -> Dfa:
    """Compile a supported formula into a total, guard-ordered DFA.

    States track (stages completed, trigger seen).  Transition priority per
    state is: forbidden atom after trigger -> trap, then the largest possible
    multi-stage advance, then trigger bookkeeping, then a catch-all self-loop.
    """
    stages, safety = task_structure(f)
    n = len(stages)
    stage_guards = [Guard(tuple(tuple((a, True) for a in clause) for clause in st)) for st in stages]
    alphabet = frozenset(formula_atoms(f))
    if len(alphabet) > 16:
        raise UnsupportedFragment("formulas over more than 16 atoms are not supported")
    TRAP = "trap"

    def symbolic(state):
        if state == TRAP:
            return [(TRUE, TRAP)]
        i, trig = state
        out = []
        if safety is not None and trig:
            out.append((_atom_guard(safety.forbidden.name), TRAP))
        for j in range(n, i, -1):
            g = TRUE
            for sg in stage_guards[i:j]:
                g = g & sg
            if safety is not None and not trig:
                out.append((g & _atom_guard(safety.trigger.name), (j, True)))
            out.append((g, (j, trig)))
        if safety is not None and not trig:
            out.append((_atom_guard(safety.trigger.name), (i, True)))
        out.append((TRUE, state))
        return out

    labels = [frozenset(c) for r in range(len(alphabet) + 1)
              for c in itertools.combinations(sorted(alphabet), r)]
    live: dict[object, list] = {}
    queue = deque([(0, False)])
    while queue:
        state = queue.popleft()
        if state in live:
            continue
        edges = symbolic(state)
        fired = set()
        for lab in labels:
            fired.add(next(k for k, (g, _) in enumerate(edges) if g.holds(lab)))
        fired.add(len(edges) - 1)
        live[state] = [edges[k] for k in sorted(fired)]
        for _, dst in live[state]:
            if dst not in live:
                queue.append(dst)

    order = sorted((s for s in live if s != TRAP), key=lambda s: (s[0], s[1]))
    if TRAP in live:
        order.append(TRAP)
    index = {s: k for k, s in enumerate(order)}
    transitions = tuple((index[s], g, index[dst]) for s in order for g, dst in live[s])
    return Dfa(
        states=tuple(range(len(order))),
        initial=index[(0, False)],
        accepting=frozenset(index[s] for s in order if s != TRAP and s[0] == n),
        trap=index.get(TRAP),
        transitions=transitions,
        alphabet=alphabet,
        progress=tuple(-1 if s == TRAP else s[0] for s in order),
    )


def dfa_step(d: Dfa, s: int, label) -> int:
    key = (s, d.alphabet.intersection(label))
    memo = d._step_memo
    dst = memo.get(key)
    if dst is None:
        dst = memo[key] = d.firing(s, key[1])[1]
    return dst


def run_dfa(d: Dfa, trace, start: int | None = None) -> list[int]:
    """States visited while reading ``trace`` (initial state first)."""
    s = d.initial if start is None else start
    states = [s]
    for lab in trace:
        s = dfa_step(d, s, lab)
        states.append(s)
    return states


def accepts(d: Dfa, trace) -> bool:
    return run_dfa(d, trace)[-1] in d.accepting


def to_dot(d: Dfa) -> str:
    lines = ["digraph dfa {", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in d.states:
        shape = "doublecircle" if s in d.accepting else "circle"
        lines.append(f'  {d.name(s)} [shape={shape}];')
    lines.append(f"  __start -> {d.name(d.initial)};")
    for src, g, dst in d.transitions:
        lines.append(f'  {d.name(src)} -> {d.name(dst)} [label="{g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
