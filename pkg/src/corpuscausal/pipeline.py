"""End-to-end orchestration: config, estimation runs, and report emission.

`run_estimate` wires the whole flow together: load inputs, verify the
canonical adjustment sets against the built-in graph, build the three
matched populations, score them with predictions, and estimate ATE and
per-relation CATE with the backdoor formula. `run_dynamics` re-scores
the same populations once per checkpoint file.

Reports hold plain floats (conversion from the estimator's exact
rationals happens exactly once, here), so a structured report round-trips
field-identically through JSON.
"""

import hashlib
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import BIN_EDGES, CorpusIndex, build_index
from .errors import ConfigError, CorpusCausalError, MissingPredictionError
from .estimator import ate, cate, interventional_prob
from .graph import CANONICAL_ADJUSTMENTS, reference_graph, satisfies_backdoor
from .kb import KnowledgeBase, load_kb, load_patterns
from .population import (
    STRATIFY_COLUMNS,
    MatchDiagnostics,
    build_structure,
    population_observation_table,
    read_population,
    score_population,
    write_population,
)
from .predictions import HYPOTHESES, baseline_predict, load_predictions

REPORT_FORMATS = ("table", "structured", "delimited")

_CONFIG_KEYS = (
    "corpus",
    "index",
    "kb",
    "patterns",
    "predictions",
    "output-dir",
    "mask-token",
    "min-poc-frequency",
    "bin-edges",
    "tie-break",
    "output-format",
    "cache-dir",
)


@dataclass(frozen=True)
class RunConfig:
    """Paths and knobs for a full estimation run.

    `predictions` is either a file path or a baseline spec:
    ``baseline:heuristic`` (each hypothesis scored with its own
    heuristic), ``baseline:heuristic-<utt|poc|soc>``, ``baseline:perfect``
    or ``baseline:random:<seed>``.
    """

    kb: str = ""
    patterns: str = ""
    corpus: str = ""
    index: str = ""
    predictions: str = ""
    output_dir: str = "."
    mask_token: str = "[MASK]"
    min_poc_frequency: int = 5
    bin_edges: tuple = BIN_EDGES
    tie_break: str = "lexicographic"
    output_format: str = "structured"
    cache_dir: str = ""

    def validate(self):
        if not self.kb or not self.patterns:
            raise ConfigError("config must name 'kb' and 'patterns' files")
        if not self.corpus and not self.index:
            raise ConfigError("config must name a 'corpus' or a prebuilt 'index'")
        if not self.predictions:
            raise ConfigError("config must name 'predictions' (path or baseline:...)")
        if self.tie_break != "lexicographic":
            raise ConfigError(f"unsupported tie-break rule: {self.tie_break!r}")
        if self.output_format not in REPORT_FORMATS:
            raise ConfigError(f"unsupported output format: {self.output_format!r}")
        edges = tuple(self.bin_edges)
        if len(edges) != 4 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigError("bin-edges must be 4 strictly increasing integers")
        if self.min_poc_frequency < 0:
            raise ConfigError("min-poc-frequency must be nonnegative")
        return self


def _parse_value(key, raw):
    if key == "min-poc-frequency":
        return int(raw)
    if key == "bin-edges":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    return raw


def load_config(path):
    """Parse the flat ``key = value`` config format (# starts a comment)."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(key, value)
    return make_config(values)


def make_config(values):
    """Build a RunConfig from kebab-case key/value mappings."""
    kwargs = {}
    for key, value in values.items():
        if value is None:
            continue
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[key.replace("-", "_")] = (
            _parse_value(key, value) if isinstance(value, str) else value
        )
    return RunConfig(**kwargs)


def merge_config(config, overrides):
    """Apply non-None CLI overrides (kebab-case keys) onto a config."""
    updates = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key.replace("-", "_")] = (
            _parse_value(key, value) if isinstance(value, str) else value
        )
    return replace(config, **updates) if updates else config


# --- report ------------------------------------------------------------------


@dataclass(frozen=True)
class EffectReport:
    """ATE/CATE estimates plus coverage and matching diagnostics."""

    source_id: str
    ate: dict  # hypothesis -> float percentage
    cate: dict  # hypothesis -> {relation -> {value, reason, n_rows}}
    diagnostics: dict  # hypothesis -> coverage/drop counters
    series: tuple = None  # per-checkpoint entries, in checkpoint order

    def to_dict(self):
        return {
            "source_id": self.source_id,
            "ate": self.ate,
            "cate": self.cate,
            "diagnostics": self.diagnostics,
            "series": list(self.series) if self.series is not None else None,
        }

    @classmethod
    def from_dict(cls, data):
        series = data.get("series")
        return cls(
            source_id=data["source_id"],
            ate=data["ate"],
            cate=data["cate"],
            diagnostics=data["diagnostics"],
            series=tuple(series) if series is not None else None,
        )


def _natural_key(name):
    return tuple(
        int(part) if part.isdigit() else part
        for part in re.split(r"(\d+)", str(name))
    )


def _file_digest(path):
    h = hashlib.blake2b(digest_size=16)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _Runtime:
    """Loaded inputs shared by estimate/dynamics runs."""

    def __init__(self, config):
        config.validate()
        self.config = config
        triplets, self.load_report = load_kb(config.kb)
        self.kb = KnowledgeBase(triplets=triplets, patterns=load_patterns(config.patterns))
        if config.index:
            self.stats = CorpusIndex.load(config.index)
            stats_fingerprint = _file_digest(config.index)
        else:
            self.stats = build_index(config.corpus)
            path = Path(config.corpus)
            files = (
                sorted(p for p in path.iterdir() if p.is_file())
                if path.is_dir()
                else [path]
            )
            stats_fingerprint = hashlib.blake2b(
                "".join(_file_digest(p) for p in files).encode(), digest_size=16
            ).hexdigest()
        self._verify_adjustments()
        self._cache_key = self._population_cache_key(stats_fingerprint)
        self._loaded_predictions = {}
        self.populations = {
            hyp: self._structure(hyp) for hyp in HYPOTHESES
        }

    def _verify_adjustments(self):
        graph = reference_graph()
        for adj in CANONICAL_ADJUSTMENTS:
            if not satisfies_backdoor(graph, adj.treatment, adj.outcome, adj.adjustment_set):
                raise CorpusCausalError(
                    f"canonical adjustment set for {adj.hypothesis} failed "
                    f"backdoor verification against the built-in graph"
                )

    def _population_cache_key(self, stats_fingerprint):
        h = hashlib.blake2b(digest_size=16)
        h.update(_file_digest(self.config.kb).encode())
        h.update(_file_digest(self.config.patterns).encode())
        h.update(stats_fingerprint.encode())
        h.update(str(self.config.min_poc_frequency).encode())
        h.update(repr(tuple(self.config.bin_edges)).encode())
        return h.hexdigest()

    def _structure(self, hypothesis):
        cache_dir = self.config.cache_dir
        if cache_dir:
            base = Path(cache_dir) / f"{hypothesis}-{self._cache_key}"
            table = base.with_suffix(".tsv")
            pairs = base.with_suffix(".pairs.tsv")
            diag = base.with_suffix(".diag.json")
            if table.exists() and pairs.exists() and diag.exists():
                pop = read_population(table, pairs, hypothesis)
                data = json.loads(diag.read_text(encoding="utf-8"))
                data["unmatched_samples"] = tuple(
                    tuple(s) for s in data["unmatched_samples"]
                )
                return replace(pop, diagnostics=MatchDiagnostics(**data))
        pop = build_structure(
            hypothesis,
            self.kb,
            self.stats,
            min_poc_frequency=self.config.min_poc_frequency,
            bin_edges=tuple(self.config.bin_edges),
        )
        if cache_dir:
            Path(cache_dir).mkdir(parents=True, exist_ok=True)
            base = Path(cache_dir) / f"{hypothesis}-{self._cache_key}"
            write_population(pop, base.with_suffix(".tsv"), base.with_suffix(".pairs.tsv"))
            d = pop.diagnostics
            base.with_suffix(".diag.json").write_text(
                json.dumps(
                    {
                        "unmatched_treated": d.unmatched_treated,
                        "unmatched_samples": [list(s) for s in d.unmatched_samples],
                        "low_frequency_removed": d.low_frequency_removed,
                    }
                ),
                encoding="utf-8",
            )
        return pop

    def predictions_for(self, hypothesis, spec):
        """Resolve a predictions spec into a PredictionSet for one hypothesis."""
        pop = self.populations[hypothesis]
        keys = sorted({(r.subject, r.relation, r.template) for r in pop.rows})
        if spec.startswith("baseline:"):
            parts = spec.split(":")
            kind = parts[1]
            seed = None
            if kind == "random":
                if len(parts) != 3:
                    raise ConfigError("random baseline spec is baseline:random:<seed>")
                seed = int(parts[2])
            elif kind == "heuristic":
                kind = f"heuristic-{hypothesis}"
            if kind not in ("heuristic-utt", "heuristic-poc", "heuristic-soc", "perfect", "random"):
                raise ConfigError(f"unknown baseline kind in {spec!r}")
            return baseline_predict(
                kind, self.kb, stats=self.stats, queries=keys, seed=seed
            )
        if spec not in self._loaded_predictions:
            self._loaded_predictions[spec] = load_predictions(spec, self.kb)
        return self._loaded_predictions[spec]

    def estimate_hypothesis(self, hypothesis, prediction_set):
        """Score one population and compute its ATE, CATE, and diagnostics."""
        scored = score_population(self.populations[hypothesis], prediction_set)
        table = population_observation_table(scored)
        z = STRATIFY_COLUMNS[hypothesis]
        est = interventional_prob(table, "treatment", "outcome", z)
        ate_value = float(ate(table, "treatment", "outcome", z))
        cate_map = {}
        for relation, result in cate(table, "relation", "treatment", "outcome", z).items():
            cate_map[relation] = {
                "value": None if result.value is None else float(result.value),
                "reason": result.reason,
                "n_rows": result.n_rows,
            }
        diag = scored.diagnostics
        diagnostics = {
            "covered_mass": float(est.covered_mass),
            "dropped_strata": est.dropped_strata,
            "positivity_violated": est.positivity_violated,
            "rows": len(scored.rows),
            "pairs": len(scored.pairs),
            "unmatched_treated": diag.unmatched_treated,
            "low_frequency_removed": diag.low_frequency_removed,
        }
        return scored, ate_value, cate_map, diagnostics

    def accuracy(self, prediction_set):
        """Share of utt-population cloze keys answered with a KB gold object."""
        pop = self.populations["utt"]
        keys = sorted({(r.subject, r.relation, r.template) for r in pop.rows})
        if not keys:
            return None
        hits = 0
        for subject, relation, template in keys:
            rec = prediction_set.get(subject, relation, template)
            if rec is not None and rec.predicted_object in set(
                self.kb.objects_of(subject, relation)
            ):
                hits += 1
        return hits / len(keys)


def run_estimate(config, emit_populations=False):
    """Build the three populations, score them, and estimate all effects.

    With `emit_populations`, the matched tables and pair files are written
    under the configured output directory.
    """
    rt = _Runtime(config)
    ates = {}
    cates = {}
    diagnostics = {}
    source_id = None
    for hyp in HYPOTHESES:
        prediction_set = rt.predictions_for(hyp, config.predictions)
        source_id = prediction_set.source_id if source_id is None else source_id
        scored, ate_value, cate_map, diag = rt.estimate_hypothesis(hyp, prediction_set)
        ates[hyp] = ate_value
        cates[hyp] = cate_map
        diagnostics[hyp] = diag
        if emit_populations:
            out = Path(config.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_population(
                scored,
                out / f"{hyp}_population.tsv",
                out / f"{hyp}_pairs.tsv",
            )
    return EffectReport(
        source_id=source_id, ate=ates, cate=cates, diagnostics=diagnostics
    )


def run_dynamics(config, checkpoint_paths):
    """One ATE triple per checkpoint, populations built once.

    Checkpoints failing to score (for instance with uncovered cloze keys)
    contribute an error entry instead of aborting the series.
    """
    if not checkpoint_paths:
        raise ConfigError("dynamics requires at least one checkpoint file")
    rt = _Runtime(config)
    ordered = sorted(checkpoint_paths, key=_natural_key)
    series = []
    last_full = None
    for path in ordered:
        entry = {"checkpoint": Path(path).stem, "ate": None, "accuracy": None, "error": None}
        try:
            prediction_set = load_predictions(path, rt.kb)
            ates = {}
            cates = {}
            diagnostics = {}
            for hyp in HYPOTHESES:
                _, ate_value, cate_map, diag = rt.estimate_hypothesis(hyp, prediction_set)
                ates[hyp] = ate_value
                cates[hyp] = cate_map
                diagnostics[hyp] = diag
            entry["ate"] = ates
            entry["accuracy"] = rt.accuracy(prediction_set)
            last_full = (prediction_set.source_id, ates, cates, diagnostics)
        except (CorpusCausalError, OSError) as exc:
            entry["error"] = str(exc)
        series.append(entry)
    if last_full is None:
        raise MissingPredictionError("no checkpoint produced a full estimate")
    source_id, ates, cates, diagnostics = last_full
    return EffectReport(
        source_id=source_id,
        ate=ates,
        cate=cates,
        diagnostics=diagnostics,
        series=tuple(series),
    )


# --- emission ----------------------------------------------------------------


def _format_value(value):
    return "n/a" if value is None else f"{value:.2f}"


def _render_table(report):
    lines = []
    lines.append("ATE (treated minus control, percent)")
    lines.append(f"{'model':<24}{'utt':>10}{'poc':>10}{'soc':>10}")
    lines.append(
        f"{report.source_id:<24}"
        + "".join(f"{_format_value(report.ate.get(h)):>10}" for h in HYPOTHESES)
    )
    has_cate = any(report.cate.get(h) for h in HYPOTHESES)
    if has_cate:
        lines.append("")
        lines.append("CATE per relation")
        for hyp in HYPOTHESES:
            for relation in sorted(report.cate.get(hyp, {})):
                cell = report.cate[hyp][relation]
                lines.append(
                    f"{hyp:<6}{relation:<28}{_format_value(cell['value']):>10}"
                )
    if report.series is not None:
        lines.append("")
        lines.append("checkpoint series")
        for entry in report.series:
            if entry.get("error"):
                lines.append(f"{entry['checkpoint']:<24}error: {entry['error']}")
            else:
                cells = "".join(
                    f"{_format_value(entry['ate'].get(h)):>10}" for h in HYPOTHESES
                )
                acc = (
                    f"  acc={entry['accuracy']:.4f}"
                    if entry.get("accuracy") is not None
                    else ""
                )
                lines.append(f"{entry['checkpoint']:<24}{cells}{acc}")
    return "\n".join(lines) + "\n"


def _render_delimited(report):
    lines = ["hypothesis\tgroup\testimate\tn_rows"]
    for hyp in HYPOTHESES:
        value = report.ate.get(hyp)
        n = report.diagnostics.get(hyp, {}).get("rows", "")
        lines.append(f"{hyp}\t*\t{'' if value is None else repr(value)}\t{n}")
        for relation in sorted(report.cate.get(hyp, {})):
            cell = report.cate[hyp][relation]
            value = cell["value"]
            lines.append(
                f"{hyp}\t{relation}\t{'' if value is None else repr(value)}\t{cell['n_rows']}"
            )
    return "\n".join(lines) + "\n"


def render_report(report, fmt):
    if fmt == "structured":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if fmt == "table":
        return _render_table(report)
    if fmt == "delimited":
        return _render_delimited(report)
    raise ConfigError(f"unsupported output format: {fmt!r}")


def emit_report(report, fmt, path):
    """Write the report in the requested format; returns the path."""
    text = render_report(report, fmt)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def load_report(path):
    """Reload a structured report; field-identical with the emitted one."""
    with open(path, encoding="utf-8") as fh:
        return EffectReport.from_dict(json.load(fh))
