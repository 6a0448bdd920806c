"""Backdoor-adjusted interventional estimates over discrete tables.

Probabilities are accumulated as exact `fractions.Fraction` values from
row counts, so identical tables produce bit-identical estimates; floats
appear only when a caller converts for reporting.

Positivity handling: a stratum with no rows in arm x is excluded from
arm x's backdoor sum, and the stratum distribution for that arm is
renormalized over its remaining mass (each P(Y=1|do(X=x)) is therefore a
weighted average of within-stratum outcome rates, so a predictor that
always follows the treated rule lands at exactly +100). `covered_mass`
reports the fraction of stratum mass observed in both arms; when it is
zero the table estimator refuses to produce an effect.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    EmptyTableError,
    NotNormalizedError,
    OverlappingSetsError,
    PositivityError,
    UnknownColumnError,
)


@dataclass(frozen=True)
class ObservationTable:
    """Rows over named discrete columns, with optional nonnegative weights."""

    columns: tuple
    rows: tuple
    weights: tuple = None

    def __post_init__(self):
        ncol = len(self.columns)
        if len(set(self.columns)) != ncol:
            raise UnknownColumnError("column names must be unique")
        for row in self.rows:
            if len(row) != ncol:
                raise ValueError("row length does not match column count")
        if self.weights is not None:
            if len(self.weights) != len(self.rows):
                raise ValueError("one weight per row required")
            if any(w < 0 for w in self.weights):
                raise ValueError("weights must be nonnegative")

    @classmethod
    def from_rows(cls, columns, rows, weights=None):
        wtuple = None
        if weights is not None:
            wtuple = tuple(Fraction(w) for w in weights)
        return cls(tuple(columns), tuple(tuple(r) for r in rows), wtuple)

    @classmethod
    def from_records(cls, records, columns=None):
        records = list(records)
        if columns is None:
            if not records:
                raise EmptyTableError("cannot infer columns from zero records")
            columns = tuple(records[0].keys())
        rows = [tuple(rec[c] for c in columns) for rec in records]
        return cls.from_rows(columns, rows)

    def column_index(self, name):
        try:
            return self.columns.index(name)
        except ValueError:
            raise UnknownColumnError(f"unknown column: {name!r}") from None

    def domain(self, name):
        """Distinct observed values of a column, sorted."""
        i = self.column_index(name)
        return sorted({row[i] for row in self.rows}, key=repr)

    def subset(self, keep):
        rows = [self.rows[i] for i in keep]
        weights = None if self.weights is None else tuple(self.weights[i] for i in keep)
        return ObservationTable(self.columns, tuple(rows), weights)

    def __len__(self):
        return len(self.rows)


def read_table(path, delimiter="\t"):
    """Read a delimited text table with a header row; values stay strings."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header:
            raise EmptyTableError(f"no header row in {path}")
        columns = header.split(delimiter)
        rows = []
        for line in fh:
            line = line.rstrip("\n")
            if line:
                rows.append(tuple(line.split(delimiter)))
    return ObservationTable.from_rows(columns, rows)


@dataclass(frozen=True)
class DoEstimate:
    """Interventional outcome probabilities plus positivity diagnostics.

    `p_outcome_given_do` maps each supported treatment value to the exact
    probability that the outcome is 1 under do(treatment=value).
    `covered_mass` is the fraction of stratum mass with both arms present;
    `dropped_strata` counts (stratum, arm) exclusions for missing support.
    """

    p_outcome_given_do: dict
    covered_mass: Fraction
    dropped_strata: int = 0

    @property
    def positivity_violated(self):
        return self.covered_mass < 1


def _as01(value, column):
    if value in (0, 1):
        return int(value)
    if value in ("0", "1"):
        return int(value)
    if isinstance(value, bool):
        return int(value)
    raise ValueError(f"column {column!r} must be binary 0/1, got {value!r}")


def _check_adjustment_columns(table, treatment, outcome, z):
    ti = table.column_index(treatment)
    oi = table.column_index(outcome)
    zis = []
    for name in z:
        if name in (treatment, outcome):
            raise OverlappingSetsError(
                "adjustment set must exclude treatment and outcome columns"
            )
        zis.append((name, table.column_index(name)))
    zis.sort(key=lambda item: item[0])
    return ti, oi, [i for _, i in zis]


def _do_from_counts(mass, arm_mass, arm_hits, total):
    """Per-arm backdoor sums from stratum mass/hit accumulators.

    Each arm's sum runs over the strata where that arm has support, with
    the stratum distribution renormalized to that support; covered_mass
    reports the both-arm stratum mass.
    """
    p_do = {}
    dropped = 0
    for x in (0, 1):
        supported = [key for key in mass if arm_mass.get((key, x), 0) > 0]
        dropped += len(mass) - len(supported)
        support_total = sum((mass[k] for k in supported), Fraction(0))
        if support_total == 0:
            continue
        acc = Fraction(0)
        for key in supported:
            hits = arm_hits.get((key, x), Fraction(0))
            acc += (hits / arm_mass[(key, x)]) * mass[key]
        p_do[x] = acc / support_total
    covered_total = sum(
        (
            mass[k]
            for k in mass
            if arm_mass.get((k, 0), 0) > 0 and arm_mass.get((k, 1), 0) > 0
        ),
        Fraction(0),
    )
    return p_do, covered_total / total, dropped


def interventional_prob(table, treatment, outcome, z=()):
    """Backdoor-adjusted P(outcome=1 | do(treatment=x)) for x in {0, 1}.

    Within each stratum of z the conditional outcome rate and the stratum
    mass are maximum-likelihood estimates from the (weighted) rows. All
    arithmetic is exact. Raises PositivityError when no stratum contains
    both arms (covered_mass would be zero).
    """
    ti, oi, zis = _check_adjustment_columns(table, treatment, outcome, z)
    if not table.rows:
        raise EmptyTableError("observation table has no rows")

    mass = {}
    arm_mass = {}
    arm_hits = {}
    total = Fraction(0)
    for ridx, row in enumerate(table.rows):
        w = Fraction(1) if table.weights is None else table.weights[ridx]
        if w == 0:
            continue
        x = _as01(row[ti], treatment)
        y = _as01(row[oi], outcome)
        key = tuple(row[i] for i in zis)
        total += w
        mass[key] = mass.get(key, Fraction(0)) + w
        arm_mass[(key, x)] = arm_mass.get((key, x), Fraction(0)) + w
        if y:
            arm_hits[(key, x)] = arm_hits.get((key, x), Fraction(0)) + w
    if total == 0:
        raise EmptyTableError("observation table has zero total weight")

    p_do, covered_mass, dropped = _do_from_counts(mass, arm_mass, arm_hits, total)
    if covered_mass == 0:
        raise PositivityError("no confounder stratum contains both treatment arms")
    return DoEstimate(p_outcome_given_do=p_do, covered_mass=covered_mass, dropped_strata=dropped)


def ate(table, treatment, outcome, z=()):
    """Average treatment effect as a percentage: treated minus control.

    100 * (P(outcome=1 | do(treatment=1)) - P(outcome=1 | do(treatment=0))),
    exact, in [-100, 100].
    """
    est = interventional_prob(table, treatment, outcome, z)
    return 100 * (est.p_outcome_given_do[1] - est.p_outcome_given_do[0])


@dataclass(frozen=True)
class CateEstimate:
    value: object  # Fraction, or None when the partition failed
    reason: str = None
    n_rows: int = 0


def cate(table, group, treatment, outcome, z=()):
    """Per-group ATE: partition rows by the group column, estimate on each.

    Partitions that cannot be estimated (no rows in one arm, no covered
    strata) are reported with a null value and the failure reason instead
    of aborting the rest.
    """
    gi = table.column_index(group)
    if group in z:
        raise OverlappingSetsError("group column must be excluded from the adjustment set")
    _check_adjustment_columns(table, treatment, outcome, z)
    partitions = {}
    for ridx, row in enumerate(table.rows):
        partitions.setdefault(row[gi], []).append(ridx)
    out = {}
    for value in sorted(partitions, key=repr):
        keep = partitions[value]
        sub = table.subset(keep)
        try:
            out[value] = CateEstimate(
                value=ate(sub, treatment, outcome, z), n_rows=len(keep)
            )
        except (PositivityError, EmptyTableError, ValueError) as exc:
            out[value] = CateEstimate(value=None, reason=str(exc), n_rows=len(keep))
    return out


def exact_joint_do(joint, names, treatment, outcome, z=()):
    """Backdoor sum evaluated analytically on a fully specified joint.

    `joint` maps assignment tuples (aligned with `names`) to probabilities
    that must total 1 within 1e-12. Serves as the ground-truth oracle for
    `interventional_prob`; the two agree exactly on the empirical joint of
    any table. Arms with no support anywhere are simply absent from the
    returned mapping (a point-mass joint reports its one configuration).
    """
    names = tuple(names)
    idx = {}
    for name in (treatment, outcome, *z):
        if name not in names:
            raise UnknownColumnError(f"unknown variable: {name!r}")
        idx[name] = names.index(name)
    if treatment == outcome or treatment in z or outcome in z:
        raise OverlappingSetsError("treatment, outcome, and z must be disjoint")

    total = sum(Fraction(p) for p in joint.values())
    if abs(total - 1) > Fraction(1, 10**12):
        raise NotNormalizedError(f"joint mass is {float(total)!r}, expected 1")

    ti = idx[treatment]
    oi = idx[outcome]
    zis = sorted(idx[name] for name in z)

    mass = {}
    arm_mass = {}
    arm_hits = {}
    for assignment, p in joint.items():
        p = Fraction(p)
        if p == 0:
            continue
        if p < 0:
            raise NotNormalizedError("joint contains negative mass")
        x = _as01(assignment[ti], treatment)
        y = _as01(assignment[oi], outcome)
        key = tuple(assignment[i] for i in zis)
        mass[key] = mass.get(key, Fraction(0)) + p
        arm_mass[(key, x)] = arm_mass.get((key, x), Fraction(0)) + p
        if y:
            arm_hits[(key, x)] = arm_hits.get((key, x), Fraction(0)) + p

    p_do, covered_mass, dropped = _do_from_counts(mass, arm_mass, arm_hits, total)
    return DoEstimate(
        p_outcome_given_do=p_do,
        covered_mass=covered_mass,
        dropped_strata=dropped,
    )
