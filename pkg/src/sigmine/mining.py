"""Size-constrained Apriori mining and association-rule generation.

Transactions are the rows of a :class:`~sigmine.trace.MiningDataset`. The
item universe is the q feature items (identified by column index 0..q-1)
plus one label item, ``ATTACK``, identified by index q; a transaction
contains ``ATTACK`` exactly when its label is 1. The full frequent lattice is
mined level-wise up to size ``max_antecedent_size + 1`` so that antecedent
supports are exact; only rule emission is constrained to the configured
antecedent-size window.

Supports and confidences are exact rationals (``fractions.Fraction`` over
row counts), and threshold comparisons are done in rational arithmetic, so
results never depend on floating-point rounding: frequent itemsets satisfy
``support >= min_support`` while emitted rules must satisfy the strict
``support > min_support`` and ``confidence > min_confidence``.

Rules always have the ``ATTACK`` item as consequent; benign is the detector's
default (complement) class and no benign- or feature-consequent rules are
generated. Redundant rules (one antecedent containing another) are kept:
deduplication by antecedent is the only pruning applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import ConfigError, RuleFileError, SchemaMismatchError
from .trace import FeatureSchema, MiningDataset

ATTACK_LABEL = "ATTACK"


def exact_fraction(value: float | int | str | Fraction) -> Fraction:
    """Convert a threshold to an exact rational.

    Floats go through their shortest decimal repr, so a literal like ``0.05``
    means exactly 1/20 rather than its binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def format_exact(value: Fraction) -> str:
    """Render a non-negative rational exactly.

    Terminating values are written as plain decimals (``27/40`` -> ``0.675``);
    non-terminating ones fall back to ``numerator/denominator``. Output parses
    back to the identical Fraction via :func:`parse_exact`.
    """
    if value < 0:
        raise ValueError("expected a non-negative value")
    if value.denominator == 1:
        return str(value.numerator)
    rest = value.denominator
    twos = fives = 0
    while rest % 2 == 0:
        rest //= 2
        twos += 1
    while rest % 5 == 0:
        rest //= 5
        fives += 1
    if rest != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value.numerator * 10**digits // value.denominator
    text = str(scaled).zfill(digits + 1)
    return f"{text[:-digits]}.{text[-digits:]}"


def parse_exact(text: str) -> Fraction:
    """Inverse of :func:`format_exact` (also accepts any decimal string)."""
    try:
        if "/" in text:
            num, den = text.split("/")
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise RuleFileError(f"bad rational literal {text!r}: {exc}") from None


@dataclass(frozen=True)
class MiningConfig:
    """Thresholds and antecedent-size window for rule mining.

    ``min_antecedent_size``/``max_antecedent_size`` default to ``q - 3`` and
    ``q`` when left as None; the concrete window is resolved against the
    dataset width by :meth:`antecedent_bounds`.
    """

    min_support: float = 0.05
    min_confidence: float = 0.90
    min_antecedent_size: int | None = None
    max_antecedent_size: int | None = None

    def __post_init__(self) -> None:
        s = exact_fraction(self.min_support)
        c = exact_fraction(self.min_confidence)
        if not 0 < s <= 1:
            raise ConfigError(f"min_support must be in (0, 1], got {self.min_support}")
        if not 0 < c <= 1:
            raise ConfigError(f"min_confidence must be in (0, 1], got {self.min_confidence}")
        for name in ("min_antecedent_size", "max_antecedent_size"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be >= 1, got {v}")

    def antecedent_bounds(self, q: int) -> tuple[int, int]:
        """Resolve (phi_min, phi_max) for a q-feature dataset."""
        lo = self.min_antecedent_size if self.min_antecedent_size is not None else max(1, q - 3)
        hi = self.max_antecedent_size if self.max_antecedent_size is not None else q
        if not 1 <= lo <= hi <= q:
            raise ConfigError(
                f"antecedent sizes must satisfy 1 <= {lo} <= {hi} <= q={q}"
            )
        return lo, hi

    def resolved(self, q: int) -> "MiningConfig":
        lo, hi = self.antecedent_bounds(q)
        return MiningConfig(self.min_support, self.min_confidence, lo, hi)

    @property
    def support_threshold(self) -> Fraction:
        return exact_fraction(self.min_support)

    @property
    def confidence_threshold(self) -> Fraction:
        return exact_fraction(self.min_confidence)


@dataclass(frozen=True)
class AssociationRule:
    """``{features} => ATTACK`` with its exact support and confidence."""

    antecedent: frozenset[int]
    support: Fraction
    confidence: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "antecedent", frozenset(self.antecedent))
        if not self.antecedent:
            raise ConfigError("rule antecedent must be non-empty")

    @property
    def consequent(self) -> str:
        return ATTACK_LABEL

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.antecedent), tuple(sorted(self.antecedent)))


@dataclass(frozen=True)
class RuleSet:
    """Deterministically ordered rules plus the context they were mined in."""

    rules: tuple[AssociationRule, ...]
    config: MiningConfig
    schema: FeatureSchema
    source: str = ""

    def __post_init__(self) -> None:
        rules = tuple(sorted(self.rules, key=AssociationRule.sort_key))
        antecedents = [r.antecedent for r in rules]
        if len(set(antecedents)) != len(antecedents):
            raise ConfigError("rule set contains duplicate antecedents")
        for r in rules:
            if any(j >= self.schema.q for j in r.antecedent):
                raise SchemaMismatchError(
                    f"rule antecedent {sorted(r.antecedent)} exceeds schema q={self.schema.q}"
                )
        object.__setattr__(self, "rules", rules)

    def __len__(self) -> int:
        return len(self.rules)


def _row_masks(ds: MiningDataset) -> np.ndarray:
    """Encode each transaction (features + label item) as a bit mask."""
    if ds.q > 62:
        raise ConfigError(f"q={ds.q} too wide for bitmask mining")
    weights = (np.uint64(1) << np.arange(ds.q, dtype=np.uint64)).astype(np.uint64)
    masks = (ds.transactions.astype(np.uint64) * weights[np.newaxis, :]).sum(
        axis=1, dtype=np.uint64
    )
    masks |= (ds.labels == 1).astype(np.uint64) << np.uint64(ds.q)
    return masks


def _itemset_mask(items: tuple[int, ...]) -> np.uint64:
    m = np.uint64(0)
    for j in items:
        m |= np.uint64(1) << np.uint64(j)
    return m


def mine_frequent_itemsets(
    ds: MiningDataset, cfg: MiningConfig
) -> list[tuple[frozenset[int], Fraction]]:
    """Level-wise Apriori over the q feature items plus the ATTACK item.

    Returns every itemset of size 1 .. phi_max + 1 whose support (containing
    row count / K, as an exact Fraction) is >= the support threshold, in
    deterministic order (size ascending, then lexicographic). Candidate
    generation uses the classic downward-closure join: every subset of a
    frequent itemset is frequent.
    """
    if ds.k < 1:
        raise ConfigError("mining dataset is empty")
    _, phi_max = cfg.antecedent_bounds(ds.q)
    threshold = cfg.support_threshold
    masks = _row_masks(ds)
    k_total = ds.k
    n_items = ds.q + 1  # features plus the ATTACK label item

    def support_count(items: tuple[int, ...]) -> int:
        m = _itemset_mask(items)
        return int(np.count_nonzero((masks & m) == m))

    result: list[tuple[frozenset[int], Fraction]] = []
    level: dict[tuple[int, ...], int] = {}
    for j in range(n_items):
        count = support_count((j,))
        if Fraction(count, k_total) >= threshold:
            level[(j,)] = count
    size = 1
    while level and size <= phi_max:  # itemsets up to size phi_max + 1
        for items in sorted(level):
            result.append((frozenset(items), Fraction(level[items], k_total)))
        prev = set(level)
        candidates = set()
        for a, b in combinations(sorted(level), 2):
            if a[:-1] == b[:-1]:  # prefix join on sorted tuples
                cand = tuple(sorted(set(a) | set(b)))
                if all(cand[:i] + cand[i + 1 :] in prev for i in range(len(cand))):
                    candidates.add(cand)
        level = {}
        for cand in candidates:
            count = support_count(cand)
            if Fraction(count, k_total) >= threshold:
                level[cand] = count
        size += 1
    for items in sorted(level):
        result.append((frozenset(items), Fraction(level[items], k_total)))
    return result


def generate_rules(
    itemsets: list[tuple[frozenset[int], Fraction]],
    ds: MiningDataset,
    cfg: MiningConfig,
    schema: FeatureSchema,
    source: str = "",
) -> RuleSet:
    """Emit ``antecedent => ATTACK`` rules from the frequent lattice.

    For each frequent itemset containing the ATTACK item whose antecedent
    size falls in the configured window, the rule support is the itemset
    support (joint probability) and the confidence is
    ``support(itemset) / support(antecedent)``. Rules are kept only under
    the strict thresholds ``support > min_support`` and
    ``confidence > min_confidence``.
    """
    if schema.q != ds.q:
        raise SchemaMismatchError(f"schema q={schema.q} but dataset q={ds.q}")
    phi_min, phi_max = cfg.antecedent_bounds(ds.q)
    attack_item = ds.q
    supports = dict(itemsets)
    sup_threshold = cfg.support_threshold
    conf_threshold = cfg.confidence_threshold

    rules = []
    for itemset, support in itemsets:
        if attack_item not in itemset:
            continue
        antecedent = itemset - {attack_item}
        if not phi_min <= len(antecedent) <= phi_max:
            continue
        if antecedent not in supports:
            raise ConfigError(
                "itemset lattice is inconsistent with the dataset: missing "
                f"antecedent {sorted(antecedent)} (were the itemsets mined from this dataset?)"
            )
        confidence = support / supports[antecedent]
        if support > sup_threshold and confidence > conf_threshold:
            rules.append(AssociationRule(antecedent, support, confidence))
    return RuleSet(tuple(rules), cfg.resolved(ds.q), schema, source)


def mine_rules(
    ds: MiningDataset, cfg: MiningConfig, schema: FeatureSchema, source: str = ""
) -> RuleSet:
    """Convenience wrapper: frequent itemsets then rule generation."""
    return generate_rules(mine_frequent_itemsets(ds, cfg), ds, cfg, schema, source)


# ---------------------------------------------------------------------------
# Rule file format
#
# Line-oriented and human-readable. A header block of "key: value" lines
# records the mining context, a blank line separates it from the body, and
# each body line is one rule:
#
#     {feature_name, feature_name, ...} => ATTACK  support=V confidence=V
#
# Antecedent features are listed by name in canonical schema order. V is an
# exact rational: a plain decimal when the value has a terminating decimal
# expansion, otherwise "numerator/denominator". Parsing is total on writer
# output and save -> load is identity.

_HEADER_KEYS = (
    "q",
    "schema",
    "min_support",
    "min_confidence",
    "min_antecedent_size",
    "max_antecedent_size",
    "source",
    "rules",
)


def save_rules(rs: RuleSet, path: str | Path) -> None:
    """Serialize a rule set in the documented line format (LF endings)."""
    cfg = rs.config.resolved(rs.schema.q)
    lines = [
        "# association rules: antecedent features => ATTACK",
        f"q: {rs.schema.q}",
        f"schema: {','.join(rs.schema.names)}",
        f"min_support: {repr(cfg.min_support)}",
        f"min_confidence: {repr(cfg.min_confidence)}",
        f"min_antecedent_size: {cfg.min_antecedent_size}",
        f"max_antecedent_size: {cfg.max_antecedent_size}",
        f"source: {rs.source}",
        f"rules: {len(rs.rules)}",
        "",
    ]
    for rule in rs.rules:
        names = ", ".join(rs.schema.names[j] for j in sorted(rule.antecedent))
        lines.append(
            f"{{{names}}} => {ATTACK_LABEL}  "
            f"support={format_exact(rule.support)} "
            f"confidence={format_exact(rule.confidence)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def _parse_rule_line(line: str, schema: FeatureSchema, path: Path) -> AssociationRule:
    try:
        lhs, rhs = line.split("=>")
        lhs = lhs.strip()
        if not (lhs.startswith("{") and lhs.endswith("}")):
            raise ValueError("antecedent must be brace-delimited")
        names = [n.strip() for n in lhs[1:-1].split(",") if n.strip()]
        antecedent = frozenset(schema.index_of(n) for n in names)
        if len(antecedent) != len(names):
            raise ValueError("duplicate feature in antecedent")
        consequent, *metrics = rhs.split()
        if consequent != ATTACK_LABEL:
            raise ValueError(f"consequent must be {ATTACK_LABEL}")
        fields = dict(m.split("=", 1) for m in metrics)
        return AssociationRule(
            antecedent,
            parse_exact(fields["support"]),
            parse_exact(fields["confidence"]),
        )
    except (ValueError, KeyError, SchemaMismatchError) as exc:
        raise RuleFileError(f"{path}: bad rule line {line!r}: {exc}") from None


def load_rules(path: str | Path, schema: FeatureSchema | None = None) -> RuleSet:
    """Parse a rule file; the inverse of :func:`save_rules`.

    When *schema* is given, the file's schema must match it exactly (same
    names, same order); otherwise the file's own schema is adopted.
    """
    path = Path(path)
    if not path.exists():
        raise RuleFileError(f"{path}: no such file")
    lines = path.read_text(encoding="utf-8").splitlines()
    header: dict[str, str] = {}
    body_start = len(lines)
    for i, line in enumerate(lines):
        if line.startswith("#"):
            continue
        if not line.strip():
            body_start = i + 1
            break
        if ":" not in line:
            raise RuleFileError(f"{path}: malformed header line {line!r}")
        key, value = line.split(":", 1)
        header[key.strip()] = value.strip()
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise RuleFileError(f"{path}: header missing key(s) {missing}")

    try:
        file_schema = FeatureSchema(tuple(header["schema"].split(",")))
        q = int(header["q"])
        cfg = MiningConfig(
            float(header["min_support"]),
            float(header["min_confidence"]),
            int(header["min_antecedent_size"]),
            int(header["max_antecedent_size"]),
        )
        declared = int(header["rules"])
    except (ValueError, ConfigError) as exc:
        raise RuleFileError(f"{path}: bad header value: {exc}") from None
    if q != file_schema.q:
        raise RuleFileError(f"{path}: header q={q} but schema lists {file_schema.q} features")
    if schema is not None and schema != file_schema:
        raise SchemaMismatchError(
            f"{path}: rule file schema (q={file_schema.q}) does not match "
            f"the active schema (q={schema.q})"
        )

    rules = [
        _parse_rule_line(line, file_schema, path)
        for line in lines[body_start:]
        if line.strip() and not line.startswith("#")
    ]
    if len(rules) != declared:
        raise RuleFileError(f"{path}: header declares {declared} rules, found {len(rules)}")
    return RuleSet(tuple(rules), cfg, file_schema, header["source"])
