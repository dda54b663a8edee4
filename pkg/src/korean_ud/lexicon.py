"""Linguistic knowledge consumed by the rewrite passes.

Subcategorization frames come from Sejong verb-dictionary entries such as::

    X=N0-이 Y=N1-에|에게 좋다
    "X"="THM": 구체물|추상적대상
    "Y"="GOL": 신체부위|인간|추상적대상

Auxiliary, catenative and fixed-expression inventories are seeded from
``data/inventory.txt`` and can be extended or overridden by a user file in
the same one-entry-per-line format.
"""
from __future__ import annotations

import enum
import functools
import io
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, TextIO

from .conllu import DependencyTree, Token


class LexiconError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class FrameWarning(UserWarning):
    pass


CORE_RELATIONS = ("nsubj", "obj", "iobj", "obl:arg")
NOMINATIVE_MARKERS = frozenset({"이", "가", "께서"})
ACCUSATIVE_MARKERS = frozenset({"을", "를"})
DATIVE_MARKERS = frozenset({"에게", "한테", "께"})
# dictionaries cite one allomorph; 이 stands for 이/가 and so on
ALLOMORPHS = {"이": "가", "가": "이", "을": "를", "를": "을", "은": "는", "는": "은",
              "과": "와", "와": "과", "으로": "로", "로": "으로"}


@dataclass(frozen=True)
class FrameSlot:
    variable: str
    arg_index: int
    markers: tuple[str, ...]
    relation: str
    semantic_role: str | None = None
    selectional: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.markers:
            raise ValueError(f"slot {self.variable} has no markers")
        if self.relation not in CORE_RELATIONS:
            raise ValueError(f"slot {self.variable}: relation {self.relation!r} is not an argument relation")


@dataclass(frozen=True)
class SubcatFrame:
    predicate_lemma: str
    slots: tuple[FrameSlot, ...]

    def __post_init__(self):
        seen = set()
        for slot in self.slots:
            if slot.relation != "obl:arg" and slot.relation in seen:
                raise ValueError(f"frame {self.predicate_lemma}: duplicate {slot.relation} slot")
            seen.add(slot.relation)

    def slot(self, variable: str) -> FrameSlot | None:
        for s in self.slots:
            if s.variable == variable:
                return s
        return None


def slot_relation(markers: Iterable[str], arity: int) -> str:
    """Map a slot's postposition markers to a UD relation.

    Dative 에게 is ``iobj`` only in frames with three or more slots; in
    two-slot frames it is an oblique argument.
    """
    markers = set(markers)
    if markers & NOMINATIVE_MARKERS:
        return "nsubj"
    if markers & ACCUSATIVE_MARKERS:
        return "obj"
    if markers & DATIVE_MARKERS and arity >= 3:
        return "iobj"
    return "obl:arg"


_TERM = re.compile(r"^([A-Za-z]\w*)=N(\d+)-(\S+)$")
_ROLE = re.compile(r'^"([^"]+)"\s*=\s*"([^"]+)"\s*:?\s*(.*)$')
_GLOSS = re.compile(r"\s*\([^()]*\)\s*$")


def _strip_gloss(text: str) -> str:
    return _GLOSS.sub("", text).strip()


def _parse_tsv_frame(line: str, lineno: int) -> SubcatFrame:
    lemma, *fields = [f.strip() for f in line.split("\t")]
    if not lemma or not fields:
        raise LexiconError("tab-separated frame needs a lemma and at least one slot", lineno)
    slots = []
    for f in fields:
        parts = f.split(":")
        # relation itself may contain a colon (obl:arg)
        if len(parts) >= 5 and parts[3] == "obl" and parts[4] == "arg":
            parts[3:5] = ["obl:arg"]
        if len(parts) < 4:
            raise LexiconError(f"bad slot field {f!r} (want VAR:Nk:markers:relation[:ROLE[:cats]])", lineno)
        var, arg, markers, relation, *rest = parts
        if not re.fullmatch(r"N\d+", arg):
            raise LexiconError(f"bad argument ordinal {arg!r}", lineno)
        role = rest[0] if rest and rest[0] else None
        cats = tuple(c for c in rest[1].split("|") if c) if len(rest) > 1 else ()
        try:
            slots.append(FrameSlot(var, int(arg[1:]), tuple(m for m in markers.split("|") if m),
                                   relation, role, cats))
        except ValueError as exc:
            raise LexiconError(str(exc), lineno) from None
    try:
        return SubcatFrame(lemma, tuple(slots))
    except ValueError as exc:
        raise LexiconError(str(exc), lineno) from None


def _parse_notation_frame(line: str, lineno: int) -> SubcatFrame:
    terms = _strip_gloss(line).split()
    if len(terms) < 2:
        raise LexiconError(f"unparseable frame line {line!r}", lineno)
    *slot_terms, lemma = terms
    if _TERM.match(lemma):
        raise LexiconError("frame line does not end in a predicate lemma", lineno)
    parsed = []
    for term in slot_terms:
        m = _TERM.match(term)
        if not m:
            raise LexiconError(f"unparseable frame term {term!r}", lineno)
        markers = tuple(x for x in m.group(3).split("|") if x)
        if not markers:
            raise LexiconError(f"frame term {term!r} has no marker", lineno)
        parsed.append((m.group(1), int(m.group(2)), markers))
    arity = len(parsed)
    try:
        return SubcatFrame(lemma, tuple(
            FrameSlot(var, idx, markers, slot_relation(markers, arity)) for var, idx, markers in parsed))
    except ValueError as exc:
        raise LexiconError(str(exc), lineno) from None


def parse_frame_file(stream: TextIO | Iterable[str] | str) -> list[SubcatFrame]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    frames: list[SubcatFrame] = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("("):
            continue  # gloss continuation line
        role = _ROLE.match(stripped)
        if role:
            _attach_role(frames, role, lineno)
            continue
        if "\t" in line:
            frames.append(_parse_tsv_frame(stripped, lineno))
        else:
            frames.append(_parse_notation_frame(stripped, lineno))
    return frames


def _attach_role(frames: list[SubcatFrame], m: re.Match, lineno: int):
    var, role, rest = m.group(1), m.group(2), _strip_gloss(m.group(3))
    frame = frames[-1] if frames else None
    if frame is None or frame.slot(var) is None:
        warnings.warn(f"line {lineno}: role line for {var!r} has no matching frame variable",
                      FrameWarning, stacklevel=3)
        return
    cats = tuple(c.strip() for c in rest.split("|") if c.strip())
    slots = tuple(
        FrameSlot(s.variable, s.arg_index, s.markers, s.relation, role, cats) if s.variable == var else s
        for s in frame.slots)
    frames[-1] = SubcatFrame(frame.predicate_lemma, slots)


def format_frame(frame: SubcatFrame) -> str:
    """Render a frame back to dictionary notation (or the tab form when the
    notation cannot carry its relations)."""
    arity = len(frame.slots)
    expressible = all(s.relation == slot_relation(s.markers, arity) and (s.semantic_role or not s.selectional)
                      for s in frame.slots)
    if not expressible:
        fields = [frame.predicate_lemma]
        for s in frame.slots:
            parts = [s.variable, f"N{s.arg_index}", "|".join(s.markers), s.relation]
            if s.semantic_role or s.selectional:
                parts.append(s.semantic_role or "")
            if s.selectional:
                parts.append("|".join(s.selectional))
            fields.append(":".join(parts))
        return "\t".join(fields) + "\n"
    terms = [f"{s.variable}=N{s.arg_index}-{'|'.join(s.markers)}" for s in frame.slots]
    lines = [" ".join(terms + [frame.predicate_lemma])]
    for s in frame.slots:
        if s.semantic_role:
            lines.append(f'"{s.variable}"="{s.semantic_role}": {"|".join(s.selectional)}'.rstrip())
    return "\n".join(lines) + "\n"


def format_frames(frames: Iterable[SubcatFrame]) -> str:
    return "".join(format_frame(f) for f in frames)


def lemma_key(lemma: str) -> str:
    """Citation form without its final 다: ``좋다`` -> ``좋``."""
    if len(lemma) > 1 and lemma.endswith("다") and "+" not in lemma:
        return lemma[:-1]
    return lemma.replace("+", "")


def lemma_stems(lemma: str) -> list[str]:
    """Candidate stems of a token lemma, longest first.

    ``거래+시키+었+다`` gives 거래시키었다, 거래시키었, 거래시키, 거래;
    a plain citation form gives itself and its 다-less stem.
    """
    if "+" in lemma:
        parts = lemma.split("+")
        return ["".join(parts[:k]) for k in range(len(parts), 0, -1)]
    stems = [lemma]
    if len(lemma) > 1 and lemma.endswith("다"):
        stems.append(lemma[:-1])
    return stems


def _lookup_stem(table: dict, lemma: str):
    for stem in lemma_stems(lemma):
        if stem in table:
            return table[stem]
    return None


# -- marker classes ---------------------------------------------------------

class MarkerClass(enum.Enum):
    NOMINATIVE = "NOMINATIVE"
    ACCUSATIVE = "ACCUSATIVE"
    DATIVE = "DATIVE"
    ADVERBIAL = "ADVERBIAL"
    VOCATIVE = "VOCATIVE"
    TOPIC = "TOPIC"
    NOMINALIZED = "NOMINALIZED"
    QUOTATIVE = "QUOTATIVE"
    NONE = "NONE"


PUNCT_TAGS = frozenset({"sf", "sp", "ss", "se", "so", "sw", "sy", "sd", "su"})
_TRAILING_PUNCT = re.compile(r"[^\w]+$")


@functools.lru_cache(maxsize=65536)
def bare_form(form: str) -> str:
    return _TRAILING_PUNCT.sub("", form) or form


@dataclass(frozen=True)
class MarkerTable:
    adverbial_postposition_tags: frozenset[str] = frozenset({"jkb"})
    vocative_tags: frozenset[str] = frozenset({"jkv", "jcv"})
    topic_particles: frozenset[str] = frozenset({"은", "는"})
    topic_tags: frozenset[str] = frozenset({"jx", "jxt"})
    nominalizer_affix_tags: frozenset[str] = frozenset({"xsn"})
    quotative_particles: frozenset[str] = frozenset({"고"})
    quotative_tags: frozenset[str] = frozenset({"jkq", "jcr"})
    nominative_tags: frozenset[str] = frozenset({"jks", "jcs"})
    accusative_tags: frozenset[str] = frozenset({"jko", "jco"})
    dative_tags: frozenset[str] = frozenset()
    dative_particles: frozenset[str] = DATIVE_MARKERS

    def __post_init__(self):
        if self.vocative_tags & self.adverbial_postposition_tags:
            raise ValueError("vocative and adverbial postposition tags overlap")
        case_sets = [self.nominative_tags, self.accusative_tags, self.dative_tags,
                     self.adverbial_postposition_tags, self.vocative_tags]
        for i, a in enumerate(case_sets):
            for b in case_sets[i + 1:]:
                if a & b:
                    raise ValueError(f"case tag sets overlap: {sorted(a & b)}")

    @property
    def case_tags(self) -> frozenset[str]:
        return (self.nominative_tags | self.accusative_tags | self.dative_tags
                | self.adverbial_postposition_tags)


DEFAULT_MARKERS = MarkerTable()


def _functional_tags(token: Token) -> list[str]:
    tags = token.xpos_tags
    while tags and tags[-1] in PUNCT_TAGS:
        tags = tags[:-1]
    return tags


def is_nominalized(token: Token, table: MarkerTable = DEFAULT_MARKERS) -> bool:
    """A noun-derivational affix after a predicate or copula morpheme
    (``두뇌+이+ㅁ`` tagged nng+vcp+xsn), as opposed to plural 들 after a noun."""
    tags = token.xpos_tags
    for prev, tag in zip(tags, tags[1:]):
        if tag in table.nominalizer_affix_tags and prev[:1] in ("v", "e"):
            return True
    return False


@functools.lru_cache(maxsize=65536)
def classify_token(table: MarkerTable, token: Token) -> MarkerClass:
    tags = _functional_tags(token)
    if not tags:
        return MarkerClass.NONE
    last = tags[-1]
    form = bare_form(token.form)
    if last in table.vocative_tags:
        return MarkerClass.VOCATIVE
    if last in table.topic_tags and any(form.endswith(p) for p in table.topic_particles):
        return MarkerClass.TOPIC
    if last in table.quotative_tags or (
            len(tags) == 1 and last.startswith("j") and form in table.quotative_particles):
        return MarkerClass.QUOTATIVE
    if is_nominalized(token, table):
        return MarkerClass.NOMINALIZED
    if last in table.nominative_tags:
        return MarkerClass.NOMINATIVE
    if last in table.accusative_tags:
        return MarkerClass.ACCUSATIVE
    if last in table.dative_tags or (
            last in table.adverbial_postposition_tags and any(form.endswith(p) for p in table.dative_particles)):
        return MarkerClass.DATIVE
    if last in table.adverbial_postposition_tags:
        return MarkerClass.ADVERBIAL
    return MarkerClass.NONE


def is_case_marked(token: Token, table: MarkerTable = DEFAULT_MARKERS) -> bool:
    return any(t in table.case_tags for t in token.xpos_tags)


def marker_surface(token: Token, table: MarkerTable = DEFAULT_MARKERS) -> str:
    """Surface form with trailing punctuation and a trailing topic/additive
    particle removed, so ``중앙에는`` is matched against markers as ``중앙에``."""
    form = bare_form(token.form)
    tags = _functional_tags(token)
    if len(tags) > 1 and tags[-1] in table.topic_tags:
        for particle in ("은", "는", "도", "만"):
            if form.endswith(particle) and len(form) > 1:
                return form[:-1]
    return form


def matching_marker(token: Token, slot: FrameSlot, table: MarkerTable = DEFAULT_MARKERS) -> str | None:
    """Longest slot marker that ends the token's surface form, if any."""
    if not is_case_marked(token, table):
        return None
    surface = marker_surface(token, table)
    best = None
    for m in slot.markers:
        for variant in (m, ALLOMORPHS.get(m)):
            if (variant and len(surface) > len(variant) and surface.endswith(variant)
                    and (best is None or len(m) > len(best))):
                best = m
    return best


# -- verb inventory and fixed expressions -------------------------------------

@dataclass(frozen=True)
class VerbEntry:
    lemma: str
    connectives: tuple[str, ...]

    @property
    def key(self) -> str:
        return lemma_key(self.lemma)

    def licensed_by(self, token: Token) -> bool:
        """Whether ``token`` ends in one of the connectives this verb requires."""
        form = bare_form(token.form)
        morphemes = token.lemma.split("+")[1:] if "+" in token.lemma else []
        return any(form.endswith(c) or c in morphemes for c in self.connectives)


_JONGSEONG = "ㄱㄲㄳㄴㄵㄶㄷㄹㄺㄻㄼㄽㄾㄿㅀㅁㅂㅄㅅㅆㅇㅈㅊㅋㅌㅍㅎ"


def _final_consonant(form: str) -> str:
    form = bare_form(form)
    if not form:
        return ""
    code = ord(form[-1]) - 0xAC00
    if not 0 <= code < 11172 or code % 28 == 0:
        return ""
    return _JONGSEONG[code % 28 - 1]


@functools.lru_cache(maxsize=65536)
def form_matches(element: str, form: str) -> bool:
    """``-ㄹ`` matches a final consonant, ``-에`` a suffix, anything else the whole form."""
    if element.startswith("-") and len(element) > 1:
        rest = element[1:]
        if len(rest) == 1 and rest in _JONGSEONG:
            return _final_consonant(form) == rest
        bare = bare_form(form)
        return len(bare) > len(rest) and bare.endswith(rest)
    return form == element or bare_form(form) == element


@dataclass(frozen=True)
class FixedExpression:
    """A grammaticalized multi-token expression and how it attaches.

    With ``host="prev"`` the first span token attaches to the preceding
    token by ``relation`` (optionally requiring that host to end in
    ``host_suffix``); with no host the first span token heads the span.
    Later span tokens always attach to the first one as ``fixed``.
    """
    name: str
    pattern: tuple[str, ...]
    host: str | None = None
    host_suffix: str | None = None
    relation: str = "fixed"


@dataclass(frozen=True)
class FixedMatch:
    start: int
    end: int
    expression: FixedExpression
    host: int | None

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass
class VerbInventory:
    tam_auxiliaries: dict[str, VerbEntry] = field(default_factory=dict)
    catenative_verbs: dict[str, VerbEntry] = field(default_factory=dict)
    fixed_expressions: list[FixedExpression] = field(default_factory=list)

    def tam(self, lemma: str) -> VerbEntry | None:
        return _lookup_stem(self.tam_auxiliaries, lemma)

    def catenative(self, lemma: str) -> VerbEntry | None:
        return _lookup_stem(self.catenative_verbs, lemma)


def _parse_fixed_params(params: str, lineno: int) -> dict:
    out = {"host": None, "host_suffix": None, "relation": "fixed"}
    for item in params.split():
        key, sep, value = item.partition("=")
        if not sep:
            raise LexiconError(f"bad fixed-expression parameter {item!r}", lineno)
        if key == "host":
            host, _, suffix = value.partition(":")
            if host not in ("prev", "none"):
                raise LexiconError(f"host must be prev or none, got {host!r}", lineno)
            out["host"] = None if host == "none" else host
            out["host_suffix"] = suffix or None
        elif key == "rel":
            out["relation"] = value
        else:
            raise LexiconError(f"unknown fixed-expression parameter {key!r}", lineno)
    return out


def load_inventory(stream: TextIO | Iterable[str] | str, base: VerbInventory | None = None) -> VerbInventory:
    """Read inventory lines ``kind<TAB>lemma-or-forms<TAB>parameters``.

    Kinds are ``tam``, ``catenative``, ``fixed`` and ``clear`` (which drops
    every entry of the named kind inherited from ``base``). A ``tam`` or
    ``catenative`` line for a lemma already present replaces it.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    inv = VerbInventory() if base is None else VerbInventory(
        dict(base.tam_auxiliaries), dict(base.catenative_verbs), list(base.fixed_expressions))
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = [c.strip() for c in line.split("\t")]
        kind = cols[0]
        if kind == "clear":
            if len(cols) < 2 or cols[1] not in ("tam", "catenative", "fixed"):
                raise LexiconError("clear needs one of tam, catenative, fixed", lineno)
            if cols[1] == "tam":
                inv.tam_auxiliaries.clear()
            elif cols[1] == "catenative":
                inv.catenative_verbs.clear()
            else:
                inv.fixed_expressions.clear()
            continue
        if len(cols) < 2 or not cols[1]:
            raise LexiconError(f"inventory line needs kind and lemma/forms: {line!r}", lineno)
        params = cols[2] if len(cols) > 2 else ""
        if kind in ("tam", "catenative"):
            connectives = tuple(c.strip().lstrip("-") for c in params.split("/") if c.strip().lstrip("-"))
            if not connectives:
                raise LexiconError(f"{kind} entry {cols[1]!r} needs a connective", lineno)
            entry = VerbEntry(cols[1], connectives)
            target = inv.tam_auxiliaries if kind == "tam" else inv.catenative_verbs
            target[entry.key] = entry
        elif kind == "fixed":
            pattern = tuple(cols[1].split())
            inv.fixed_expressions = [e for e in inv.fixed_expressions if e.pattern != pattern]
            inv.fixed_expressions.append(FixedExpression(cols[1], pattern, **_parse_fixed_params(params, lineno)))
        else:
            raise LexiconError(f"unknown inventory kind {kind!r}", lineno)
    return inv


def seed_inventory() -> VerbInventory:
    text = resources.files("korean_ud").joinpath("data/inventory.txt").read_text(encoding="utf-8")
    return load_inventory(text)


def match_fixed(inventory: VerbInventory, tree: DependencyTree, start_index: int) -> FixedMatch | None:
    """Longest inventory expression whose forms match from ``start_index``.

    Ties go to the expression listed first.
    """
    n = len(tree.tokens)
    if not 1 <= start_index <= n:
        raise IndexError(f"token index {start_index} out of range 1..{n}")
    best = None
    for expr in inventory.fixed_expressions:
        end = start_index + len(expr.pattern) - 1
        if end > n or not form_matches(expr.pattern[0], tree.tokens[start_index - 1].form):
            continue
        if not all(form_matches(el, tree.tokens[start_index + k - 1].form) for k, el in enumerate(expr.pattern)):
            continue
        host = None
        if expr.host == "prev":
            host = start_index - 1
            if host < 1:
                continue
            if expr.host_suffix and not form_matches("-" + expr.host_suffix, tree[host].form):
                continue
        if best is None or len(expr.pattern) > len(best.expression.pattern):
            best = FixedMatch(start_index, end, expr, host)
    return best


# -- the loaded lexicon --------------------------------------------------------

@dataclass
class Lexicon:
    frames: list[SubcatFrame] = field(default_factory=list)
    inventory: VerbInventory = field(default_factory=seed_inventory)
    markers: MarkerTable = DEFAULT_MARKERS
    _index: dict[str, list[SubcatFrame]] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        for frame in self.frames:
            self._index.setdefault(lemma_key(frame.predicate_lemma), []).append(frame)

    def lookup_frames(self, lemma: str) -> list[SubcatFrame]:
        return list(_lookup_stem(self._index, lemma) or ())


def lookup_frames(lexicon: Lexicon, lemma: str) -> list[SubcatFrame]:
    return lexicon.lookup_frames(lemma)


def frame_score(frame: SubcatFrame, dependents: Iterable[Token], table: MarkerTable = DEFAULT_MARKERS) -> int:
    deps = list(dependents)
    return sum(1 for slot in frame.slots if any(matching_marker(d, slot, table) for d in deps))


def best_frame(lexicon: Lexicon, lemma: str, dependents: Iterable[Token]) -> SubcatFrame | None:
    """Frame satisfying the most slots; ties go to file order."""
    frames = lexicon.lookup_frames(lemma)
    if not frames:
        return None
    deps = list(dependents)
    best, best_score = None, -1
    for frame in frames:
        score = frame_score(frame, deps, lexicon.markers)
        if score > best_score:
            best, best_score = frame, score
    return best


def slot_for(frame: SubcatFrame, token: Token, table: MarkerTable = DEFAULT_MARKERS) -> FrameSlot | None:
    """Slot whose marker matches ``token``; the longest marker wins."""
    best, best_len = None, 0
    for slot in frame.slots:
        m = matching_marker(token, slot, table)
        if m and len(m) > best_len:
            best, best_len = slot, len(m)
    return best


def bundled_frames() -> list[SubcatFrame]:
    text = resources.files("korean_ud").joinpath("data/frames.txt").read_text(encoding="utf-8")
    return parse_frame_file(text)


def default_lexicon() -> Lexicon:
    """Seed inventory plus the bundled frames."""
    return Lexicon(bundled_frames())


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load frames and inventory overrides.

    ``path`` may be a frame file, or a directory holding ``frames.txt``
    and/or ``inventory.txt``. ``None`` gives :func:`default_lexicon`.
    """
    if path is None:
        return default_lexicon()
    path = Path(path)
    inventory = seed_inventory()
    frames: list[SubcatFrame] = []
    if path.is_dir():
        frame_file, inv_file = path / "frames.txt", path / "inventory.txt"
        if not frame_file.exists() and not inv_file.exists():
            raise LexiconError(f"{path} holds neither frames.txt nor inventory.txt")
        if frame_file.exists():
            with open(frame_file, encoding="utf-8") as f:
                frames = parse_frame_file(f)
        if inv_file.exists():
            with open(inv_file, encoding="utf-8") as f:
                inventory = load_inventory(f, base=inventory)
    else:
        with open(path, encoding="utf-8") as f:
            frames = parse_frame_file(f)
    return Lexicon(frames, inventory)
