"""Natural-language task prompts to formula text.

Two translators share one validation gate: template rules that are pure and
deterministic, and an optional chat-completion endpoint whose reply is
post-processed and checked against the grammar before it is trusted.  When
the model reply is unusable the rules take over.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .errors import AmbiguousOrder, LtlPlanError, NoGoalsRecognized
from .ltl import (And, Atom, Eventually, Or, TriggerSafety, compile_dfa, format_formula,
                  formula_atoms, parse_ltl)

log = logging.getLogger(__name__)

API_KEY_ENV = "LTLPLAN_LLM_API_KEY"

DEFAULT_PROMPT = (
    "Translate the robot task below into a linear temporal logic formula.\n"
    "Use only these atomic propositions: {atoms}.\n"
    "Write sequences as nested eventually operators, e.g. F(a & F(b & F(c))), "
    "alternatives as a||b, and 'avoid u after t' as G(t -> X G(!u)).\n"
    "Answer with the formula only.\n\nTask: {task}\n"
)


class Source(enum.Enum):
    RULES = "Rules"
    LLM = "Llm"
    LLM_FALLBACK = "LlmFallbackToRules"


@dataclass(frozen=True)
class TranslationResult:
    formula_text: str
    source: Source
    raw_model_output: str | None = None


@dataclass(frozen=True)
class LlmEndpointConfig:
    base_url: str
    model_name: str
    api_key: str | None = field(default=None, repr=False)
    timeout: float = 30.0
    max_retries: int = 2
    prompt_template: str = DEFAULT_PROMPT
    retry_backoff: float = 0.5

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if "{task}" not in self.prompt_template:
            raise ValueError("prompt_template needs a {task} slot")
        if self.api_key is None:
            object.__setattr__(self, "api_key", os.environ.get(API_KEY_ENV))


# -- template rules ------------------------------------------------------------

_WORD = re.compile(r"[a-z][a-z0-9]*")
_GOAL_ALIAS = re.compile(r"\b(?:goal|region)\s*(\d+)\b")
_SAFETY = [
    # avoid us after g1 / never enter us after visiting g1
    re.compile(r"\b(?:avoid|never\s+(?:visit|enter|go\s+to|pass\s+through|reach)?)\s*(?:the\s+)?"
               r"(?P<u>[a-z][a-z0-9]*)\s+(?:once\s+|after\s+|since\s+)(?:having\s+)?"
               r"(?:visited\s+|visiting\s+|reaching\s+|reached\s+|entering\s+)?(?:the\s+)?"
               r"(?P<t>[a-z][a-z0-9]*)\b"),
    # after (visiting) g1, avoid us / never enter us
    re.compile(r"\b(?:after|once)\s+(?:visiting\s+|reaching\s+|entering\s+)?(?:the\s+)?"
               r"(?P<t>[a-z][a-z0-9]*)\s*,?\s*(?:always\s+)?(?:avoid|never\s+(?:visit|enter|go\s+to|reach)?)"
               r"\s*(?:the\s+)?(?P<u>[a-z][a-z0-9]*)\b"),
]
_SEQ_WORDS = {"then", "and", "after", "before", "next", "finally", "last", "first", "afterwards"}


def _normalize(text: str, known) -> str:
    text = text.lower()

    def alias(mo):
        name = f"g{mo.group(1)}"
        return name if name in known else mo.group(0)

    return _GOAL_ALIAS.sub(alias, text)


def _safety_clauses(text: str, known):
    """Find trigger-safety phrases; return the clauses and their character spans."""
    found, spans = [], []
    for pat in _SAFETY:
        for mo in pat.finditer(text):
            if any(a < mo.end() and mo.start() < b for a, b in spans):
                continue
            t, u = mo.group("t"), mo.group("u")
            if t in known and u in known:
                found.append((mo.start(), TriggerSafety(Atom(t), Atom(u))))
                spans.append((mo.start(), mo.end()))
    found.sort(key=lambda x: x[0])
    return [c for _, c in found], spans


def translate_rules(text: str, known_atoms) -> str:
    """Deterministic template translation.

    Goal mentions are read in order of appearance; ``or`` between two adjacent
    mentions merges them into one stage.  ``avoid X after Y`` and
    ``never X after Y`` add a safety clause.
    """
    known = set(known_atoms)
    norm = _normalize(text, known)
    clauses, spans = _safety_clauses(norm, known)
    if len(clauses) > 1:
        raise AmbiguousOrder("only one 'avoid ... after ...' clause is supported")

    mentions = []
    for mo in _WORD.finditer(norm):
        if mo.group(0) in known and not any(a <= mo.start() < b for a, b in spans):
            mentions.append(mo)
    if not mentions:
        raise NoGoalsRecognized(f"no known region mentioned in {text!r}")

    def gap_words(a, b):
        chunk = norm[a:b]
        for s0, s1 in spans:
            chunk = chunk.replace(norm[s0:s1], " ")
        return _WORD.findall(chunk)

    if "or" in gap_words(0, mentions[0].start()) or "or" in gap_words(mentions[-1].end(), len(norm)):
        raise AmbiguousOrder("'or' must sit between two goal mentions")

    stages = [[mentions[0].group(0)]]
    for prev, cur in zip(mentions, mentions[1:]):
        words = gap_words(prev.end(), cur.start())
        if "or" in words:
            if set(words) & _SEQ_WORDS:
                raise AmbiguousOrder(f"cannot tell whether 'or' binds around {words}")
            if cur.group(0) not in stages[-1]:
                stages[-1].append(cur.group(0))
        else:
            if "after" in words:
                raise AmbiguousOrder("reverse ordering ('X after Y') is not supported; list goals in order")
            stages.append([cur.group(0)])

    node = None
    for stage in reversed(stages):
        goal = _or_chain(stage)
        node = Eventually(goal if node is None else And(goal, node))
    if clauses:
        node = And(node, clauses[0])
    out = format_formula(node)
    parse_ltl(out)  # the rules must never emit something the parser rejects
    return out


def _or_chain(atoms):
    node = Atom(atoms[-1])
    for a in reversed(atoms[:-1]):
        node = Or(Atom(a), node)
    return node


# -- model output post-processing ---------------------------------------------

_FENCE = re.compile(r"```[a-zA-Z]*\n?|```")


def extract_formula(raw: str, known_atoms) -> str | None:
    """Longest substring of ``raw`` that parses, compiles and uses only known atoms."""
    text = _FENCE.sub(" ", raw).replace("`", " ")
    text = text.replace("∧", "&").replace("∨", "||").replace("¬", "!").replace("→", "->")
    starts = [i for i, ch in enumerate(text)
              if ch in "FG" and (i == 0 or not (text[i - 1].isalnum() or text[i - 1] == "_"))]
    ends = [i + 1 for i, ch in enumerate(text) if ch == ")"]
    spans = sorted(((s, e) for s in starts for e in ends if e > s), key=lambda se: (se[0] - se[1], se[0]))
    known = set(known_atoms)
    for s, e in spans:
        try:
            f = parse_ltl(text[s:e])
        except LtlPlanError:
            continue
        if formula_atoms(f) <= known:
            try:
                compile_dfa(f)
            except LtlPlanError:
                continue
            return format_formula(f)
    return None


def _redact(s: str, secret: str | None) -> str:
    return s.replace(secret, "***") if secret else s


def _chat_url(base_url: str) -> str:
    base = base_url.rstrip("/")
    return base if base.endswith("/chat/completions") else base + "/chat/completions"


def request_completion(prompt: str, cfg: LlmEndpointConfig) -> str:
    """POST one user message; return the assistant text.  Retries transient failures."""
    body = json.dumps({"model": cfg.model_name, "temperature": 0,
                       "messages": [{"role": "user", "content": prompt}]}).encode()
    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"
    url = _chat_url(cfg.base_url)
    last = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            time.sleep(cfg.retry_backoff * 2 ** (attempt - 1))
        log.debug("POST %s headers=%s body=%s", url,
                  _redact(json.dumps(headers), cfg.api_key), body.decode())
        req = urllib.request.Request(url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=cfg.timeout) as resp:
                payload = resp.read().decode("utf-8")
        except urllib.error.HTTPError as exc:
            last = exc
            log.debug("HTTP %s from endpoint", exc.code)
            if exc.code < 500 and exc.code != 429:
                break
            continue
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            last = exc
            log.debug("request failed: %s", _redact(str(exc), cfg.api_key))
            continue
        log.debug("response %s", _redact(payload, cfg.api_key))
        try:
            return json.loads(payload)["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise LlmResponseError(f"unexpected response shape: {exc}") from exc
    raise LlmResponseError(f"endpoint failed after {cfg.max_retries + 1} attempt(s): {last}")


class LlmResponseError(LtlPlanError):
    pass


def translate_llm(text: str, cfg: LlmEndpointConfig, known_atoms) -> TranslationResult:
    """Ask the model; validate its answer; fall back to the rules on any failure."""
    known = sorted(set(known_atoms))
    prompt = cfg.prompt_template.replace("{atoms}", ", ".join(known)).replace("{task}", text)
    raw = None
    try:
        raw = request_completion(prompt, cfg)
        formula = extract_formula(raw, known)
    except LtlPlanError as exc:
        log.info("model translation unavailable: %s", exc)
        formula = None
    if formula is not None:
        return TranslationResult(formula, Source.LLM, raw)
    log.info("model output rejected; using rule translation")
    return TranslationResult(translate_rules(text, known), Source.LLM_FALLBACK, raw)


def translate(text: str, known_atoms, cfg: LlmEndpointConfig | None = None) -> TranslationResult:
    if cfg is None:
        return TranslationResult(translate_rules(text, known_atoms), Source.RULES)
    return translate_llm(text, cfg, known_atoms)
