"""Readers and writers for the CSP JSON and DIMACS CNF formats."""
from __future__ import annotations

import json
import re

from .core import CnfFormula, Constraint, CspInstance, validate


class FormatError(ValueError):
    """Malformed document; ``line``/``column`` are 1-based when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column}" if column is not None else "") + ": " \
            if line is not None else ""
        super().__init__(where + message)


def parse_csp(text: str) -> CspInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object")
    for key in ("variables", "domain_size", "constraints"):
        if key not in doc:
            raise FormatError(f"missing key {key!r}")
    names = doc["variables"]
    d = doc["domain_size"]
    if not isinstance(names, list) or not all(isinstance(x, str) for x in names):
        raise FormatError("'variables' must be a list of strings")
    if len(set(names)) != len(names):
        raise FormatError("duplicate variable name")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise FormatError("'domain_size' must be a positive integer")
    if not isinstance(doc["constraints"], list):
        raise FormatError("'constraints' must be a list")
    index = {name: i for i, name in enumerate(names)}
    constraints = []
    for ci, entry in enumerate(doc["constraints"]):
        if not isinstance(entry, dict) or "scope" not in entry or "tuples" not in entry:
            raise FormatError(f"constraint {ci}: needs 'scope' and 'tuples'")
        try:
            scope = tuple(index[v] for v in entry["scope"])
        except (KeyError, TypeError):
            raise FormatError(f"constraint {ci}: unknown variable in scope") from None
        tuples = entry["tuples"]
        if not isinstance(tuples, list) or not isinstance(entry["scope"], list):
            raise FormatError(f"constraint {ci}: 'scope' and 'tuples' must be lists")
        for t in tuples:
            if not isinstance(t, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                                  for x in t):
                raise FormatError(f"constraint {ci}: tuples must be integer lists")
        constraints.append(Constraint(scope, [tuple(t) for t in tuples]))
    inst = CspInstance(len(names), d, tuple(constraints), tuple(names))
    problem = validate(inst)
    if problem is not None:
        raise FormatError(problem)
    return inst


def write_csp(instance: CspInstance) -> str:
    names = [instance.name(v) for v in range(instance.num_vars)]
    lines = ["{",
             f'  "variables": {json.dumps(names)},',
             f'  "domain_size": {instance.domain_size},',
             '  "constraints": [']
    body = []
    for c in instance.constraints:
        scope = json.dumps([names[v] for v in c.scope])
        tuples = json.dumps([list(t) for t in c.relation])
        body.append(f'    {{"scope": {scope}, "tuples": {tuples}}}')
    if body:
        lines.append(",\n".join(body))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF. Tautological clauses are dropped."""
    header = None
    clauses = []
    current = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise FormatError("duplicate header", lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError(f"bad header {line!r}", lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise FormatError(f"bad header {line!r}", lineno) from None
            if header[0] < 0 or header[1] < 0:
                raise FormatError("negative counts in header", lineno)
            continue
        if header is None:
            raise FormatError("clause before 'p cnf' header", lineno)
        for match in re.finditer(r"\S+", raw):
            tok, col = match.group(), match.start() + 1
            try:
                lit = int(tok)
            except ValueError:
                raise FormatError(f"not an integer: {tok!r}", lineno, col) from None
            if lit == 0:
                clauses.append(current)
                current = []
            elif abs(lit) > header[0]:
                raise FormatError(f"literal {lit} exceeds variable count {header[0]}", lineno, col)
            else:
                current.append(lit)
    if header is None:
        raise FormatError("missing 'p cnf' header")
    if current:
        raise FormatError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise FormatError(f"header declares {header[1]} clauses, found {len(clauses)}")
    kept = []
    for clause in clauses:
        lits = set(clause)
        if any(-l in lits for l in lits):
            continue
        kept.append(clause)
    return CnfFormula(header[0], tuple(kept))


def write_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {formula.num_clauses}"]
    lines += [" ".join(map(str, clause)) + " 0" for clause in formula.clauses]
    if formula.unsat:
        lines.append("0")
    return "\n".join(lines) + "\n"


def load(path) -> object:
    """Read a CSP JSON or DIMACS file, deciding by content."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return parse_csp(text)
    return parse_dimacs(text)
