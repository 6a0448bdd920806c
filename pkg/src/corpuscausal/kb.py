"""Knowledge-base triplets, relation patterns, and anti-patterns.

Both inputs are UTF-8 JSON-lines files: triplet records carry
``subject``/``relation``/``object``; pattern records carry
``relation``/``template``/``is_anti``. Anti-patterns are ordinary input
records flagged true, not a bundled resource.
"""

import json
from dataclasses import dataclass, field

from .corpus import normalize_text, template_parts
from .errors import EmptyKbError, ParseError, UnknownRelationError


@dataclass(frozen=True, order=True)
class Triplet:
    subject: str
    relation: str
    object: str


@dataclass(frozen=True, order=True)
class PatternSpec:
    relation: str
    template: str
    is_anti: bool = False


@dataclass(frozen=True)
class LoadReport:
    """Per-relation record counts plus a duplicate counter."""

    counts: dict
    duplicates: int = 0


@dataclass(frozen=True)
class KnowledgeBase:
    triplets: tuple
    patterns: tuple
    relations: tuple = field(init=False)

    def __post_init__(self):
        relations = tuple(sorted({t.relation for t in self.triplets}))
        object.__setattr__(self, "relations", relations)
        known = set(relations)
        non_anti = {r: 0 for r in known}
        for pat in self.patterns:
            if pat.relation not in known:
                raise UnknownRelationError(
                    f"pattern relation {pat.relation!r} has no triplets"
                )
            if not pat.is_anti:
                non_anti[pat.relation] += 1
        missing = sorted(r for r, n in non_anti.items() if n == 0)
        if missing:
            raise UnknownRelationError(
                f"relations without a non-anti pattern: {missing}"
            )

    def candidate_objects(self, relation):
        """Gold objects of a relation (the type-preserving candidate set)."""
        if relation not in set(self.relations):
            raise UnknownRelationError(f"unknown relation: {relation!r}")
        return sorted({t.object for t in self.triplets if t.relation == relation})

    def subjects(self, relation):
        if relation not in set(self.relations):
            raise UnknownRelationError(f"unknown relation: {relation!r}")
        return sorted({t.subject for t in self.triplets if t.relation == relation})

    def objects_of(self, subject, relation):
        """Gold objects recorded for one subject under one relation."""
        return sorted(
            {
                t.object
                for t in self.triplets
                if t.subject == subject and t.relation == relation
            }
        )

    def paraphrases(self, relation):
        return [p for p in self.patterns if p.relation == relation and not p.is_anti]

    def anti_patterns(self, relation):
        return [p for p in self.patterns if p.relation == relation and p.is_anti]

    def has_triplet(self, subject, relation, obj):
        return Triplet(subject, relation, obj) in set(self.triplets)


def _jsonl_records(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON record: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("record must be a JSON object", line=lineno)
            yield lineno, record


def _required(record, key, lineno):
    if key not in record:
        raise ParseError(f"missing field {key!r}", line=lineno)
    value = record[key]
    if not isinstance(value, str) or not value.strip():
        raise ParseError(f"field {key!r} must be a non-empty string", line=lineno)
    return normalize_text(value)


def load_kb(path):
    """Load and deduplicate the triplet portion; returns (triplets, LoadReport)."""
    triplets = []
    seen = set()
    counts = {}
    duplicates = 0
    for lineno, record in _jsonl_records(path):
        trip = Triplet(
            subject=_required(record, "subject", lineno),
            relation=_required(record, "relation", lineno),
            object=_required(record, "object", lineno),
        )
        if trip in seen:
            duplicates += 1
            continue
        seen.add(trip)
        triplets.append(trip)
        counts[trip.relation] = counts.get(trip.relation, 0) + 1
    if not triplets:
        raise EmptyKbError(f"no triplets found in {path}")
    return tuple(triplets), LoadReport(counts=counts, duplicates=duplicates)


def load_patterns(path):
    """Load pattern records, validating both slots in every template."""
    patterns = []
    seen = set()
    for lineno, record in _jsonl_records(path):
        relation = _required(record, "relation", lineno)
        template = _required(record, "template", lineno)
        template_parts(template)  # raises MalformedPatternError
        is_anti = record.get("is_anti", False)
        if not isinstance(is_anti, bool):
            raise ParseError("field 'is_anti' must be a boolean", line=lineno)
        pat = PatternSpec(relation=relation, template=template, is_anti=is_anti)
        if pat not in seen:
            seen.add(pat)
            patterns.append(pat)
    return tuple(patterns)


def load_knowledge_base(triplet_path, pattern_path):
    """Assemble a validated KnowledgeBase from the two input files."""
    triplets, report = load_kb(triplet_path)
    patterns = load_patterns(pattern_path)
    return KnowledgeBase(triplets=triplets, patterns=patterns), report


def save_triplets(triplets, path):
    with open(path, "w", encoding="utf-8") as fh:
        for t in triplets:
            fh.write(
                json.dumps(
                    {"subject": t.subject, "relation": t.relation, "object": t.object},
                    ensure_ascii=False,
                )
                + "\n"
            )


def save_patterns(patterns, path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in patterns:
            fh.write(
                json.dumps(
                    {
                        "relation": p.relation,
                        "template": p.template,
                        "is_anti": p.is_anti,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
