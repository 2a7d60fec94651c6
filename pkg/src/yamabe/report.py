"""Report assembly and serialization: exact rationals as "p/q" strings, JSON and
CSV tables, deterministic byte-identical output for identical inputs."""

from __future__ import annotations

import io
import json

from . import __version__
from .jets import Jet
from .scalars import LambdaRational, as_exact


def scalar_str(v):
    v = as_exact(v)
    if isinstance(v, LambdaRational):
        return repr(v)
    return str(v)


def jet_table(jet: Jet):
    """{'k1,k2,...': 'p/q'} with keys sorted by (degree, lex)."""
    out = {}
    for m in jet.monomials_sorted():
        out[",".join(str(e) for e in m)] = scalar_str(jet.coeffs[m])
    return out


def matrix_table(mat):
    return [[jet_table(e) for e in row] for row in mat.entries]


class Report:
    def __init__(self, spec_digest, requested, orders):
        self.spec_digest = spec_digest
        self.requested = sorted(requested)
        self.orders = orders
        self.tables = {}
        self.verdicts = []
        self.notes = {}

    def add_table(self, name, jet_or_map, note=None):
        if isinstance(jet_or_map, Jet):
            self.tables[name] = {"coefficients": jet_table(jet_or_map),
                                 "order": _ser_order(jet_or_map.order)}
        else:
            self.tables[name] = jet_or_map
        if note:
            self.notes[name] = note

    def add_verdict(self, case_id, identity, passed, defect=None):
        entry = {"id": case_id, "identity": identity, "passed": bool(passed)}
        if defect is not None and not passed:
            entry["defect"] = jet_table(defect) if isinstance(defect, Jet) else str(defect)
        self.verdicts.append(entry)

    @property
    def all_passed(self):
        return all(v["passed"] for v in self.verdicts)

    def to_dict(self):
        return {
            "engine": {"name": "yamabe", "version": __version__},
            "provenance": {"spec": self.spec_digest, "orders": self.orders},
            "requested": self.requested,
            "tables": {k: self.tables[k] for k in sorted(self.tables)},
            "notes": {k: self.notes[k] for k in sorted(self.notes)},
            "verdicts": sorted(self.verdicts, key=lambda v: v["id"]),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        buf.write("table,monomial,value\n")
        for name in sorted(self.tables):
            table = self.tables[name]
            coeffs = table.get("coefficients", {}) if isinstance(table, dict) else {}
            for mono in coeffs:
                buf.write(f"{name},\"{mono}\",{coeffs[mono]}\n")
        for v in sorted(self.verdicts, key=lambda v: v["id"]):
            buf.write(f"verdict:{v['id']},{v['identity']},{'pass' if v['passed'] else 'FAIL'}\n")
        return buf.getvalue()

    def to_pretty(self):
        lines = [f"yamabe {__version__}  spec {self.spec_digest}"]
        if self.orders:
            lines.append("orders: " + ", ".join(f"{k}={v}" for k, v in sorted(self.orders.items())))
        for name in sorted(self.tables):
            table = self.tables[name]
            lines.append(f"\n[{name}]" + (f"  ({self.notes[name]})" if name in self.notes else ""))
            coeffs = table.get("coefficients", {}) if isinstance(table, dict) else {}
            if not coeffs:
                lines.append("  0")
            for mono, val in coeffs.items():
                lines.append(f"  [{mono}]  {val}")
        if self.verdicts:
            lines.append("")
            for v in sorted(self.verdicts, key=lambda v: v["id"]):
                mark = "pass" if v["passed"] else "FAIL"
                lines.append(f"{mark}  {v['id']}  --  {v['identity']}")
            lines.append(f"\n{sum(v['passed'] for v in self.verdicts)}/{len(self.verdicts)} checks passed")
        return "\n".join(lines) + "\n"

    def render(self, fmt):
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "pretty":
            return self.to_pretty()
        raise ValueError(f"unknown format {fmt!r}")


def _ser_order(order):
    from .jets import INF_ORDER

    return "exact" if order >= INF_ORDER else order
