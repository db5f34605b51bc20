"""
Side-by-side robustness report for one or more PerfRecords.

Rows follow the benchmark layout: natural samples, the 19 corruptions grouped
as Noise / Blur / Weather / Digital, their average, and the adversarial score.
Both renderings print the same percentages, rounded once by
``ReportDocument.in_percent``; the in-memory document keeps raw fractions.
"""

import logging
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

from jinja2 import Environment, FileSystemLoader

from robustlab.core.exceptions import ConfigurationError, ReportMismatchError
from robustlab.models.corruption import CORRUPTION_GROUPS, CorruptionKind
from robustlab.models.evaluation import PerfRecord, ReportDocument, ReportRow
from robustlab.services.evaluation_service import summarize
from robustlab.utils.helpers import ensure_dir, write_json

logger = logging.getLogger(__name__)

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "templates")
REPORT_TEMPLATE = "report.txt.j2"

NATURAL_ROW = "Natural Samples"
AVERAGE_ROW = "Average of 19 Corruptions"
ADVERSARIAL_ROW = "Adversarial Samples"

_ACRONYMS = {"jpeg": "JPEG"}


def display_name(kind: CorruptionKind) -> str:
    """``jpeg_compression`` -> ``JPEG Compression``."""
    return " ".join(_ACRONYMS.get(word, word.capitalize()) for word in kind.value.split("_"))


def _best_index(values: Sequence[Optional[float]]) -> Optional[int]:
    present = [(v, i) for i, v in enumerate(values) if v is not None]
    if not present:
        return None
    best = max(v for v, _ in present)
    return next(i for v, i in present if v == best)


def _row(group: str, name: str, values: List[Optional[float]], pairwise: bool) -> ReportRow:
    difference = None
    if pairwise and values[0] is not None and values[1] is not None:
        difference = values[1] - values[0]
    return ReportRow(group=group, name=name, values=values, best_index=_best_index(values), difference=difference)


def build_document(records: Sequence[PerfRecord]) -> ReportDocument:
    """
    Assemble the report rows from stored records without re-evaluating anything.

    Args:
        records: one column per record, in the given order

    Returns:
        ReportDocument with raw fractions

    Raises:
        ReportMismatchError: records evaluated on different datasets or metrics
    """
    if not records:
        raise ConfigurationError("A report needs at least one PerfRecord")
    dataset_ids = {r.dataset_id for r in records}
    if len(dataset_ids) != 1:
        raise ReportMismatchError(f"Records come from different datasets: {sorted(dataset_ids)}")
    metrics = {r.metric for r in records}
    if len(metrics) != 1:
        raise ReportMismatchError(f"Records use different metrics: {sorted(metrics)}")

    summaries = [summarize(r) for r in records]
    pairwise = len(records) == 2

    rows = [_row("", NATURAL_ROW, [s.clean for s in summaries], pairwise)]
    for group, kinds in CORRUPTION_GROUPS.items():
        for kind in kinds:
            rows.append(_row(group, display_name(kind), [s.per_corruption[kind] for s in summaries], pairwise))
    rows.append(_row("", AVERAGE_ROW, [s.overall for s in summaries], pairwise))
    if any(s.adversarial is not None for s in summaries):
        rows.append(_row("", ADVERSARIAL_ROW, [s.adversarial for s in summaries], pairwise))

    return ReportDocument(
        dataset_id=records[0].dataset_id,
        metric=records[0].metric,
        columns=[r.label for r in records],
        rows=rows,
    )


class ReportRenderer:
    """Renders a ReportDocument as an aligned text table through a Jinja2 template."""

    def __init__(self, template_dir: str = TEMPLATE_DIR):
        self.env = Environment(
            loader=FileSystemLoader(template_dir),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
        )
        self.template = self.env.get_template(REPORT_TEMPLATE)

    @staticmethod
    def _percent(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.2f}%"

    @staticmethod
    def _signed(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:+.2f}"

    def context(self, document: ReportDocument) -> Dict[str, Any]:
        document = document.in_percent()
        marked = len(document.columns) > 1
        show_difference = len(document.columns) == 2

        def cell(row: ReportRow, index: int) -> str:
            text = self._percent(row.values[index])
            return text + ("*" if marked and row.best_index == index else " ")

        width = max([len(c) for c in document.columns] + [len("100.00%*")])
        group_width = max(len(row.group) for row in document.rows)
        name_width = max(len(row.name) for row in document.rows)
        difference_header = "Difference"
        diff_width = len(difference_header)

        rows = []
        previous_group = None
        for row in document.rows:
            rows.append({
                "group": row.group if row.group != previous_group else "",
                "name": row.name,
                "cells": [cell(row, i).rjust(width) for i in range(len(document.columns))],
                "difference": self._signed(row.difference).rjust(diff_width),
                "rule_before": row.group != previous_group and previous_group is not None,
            })
            previous_group = row.group

        header = [c.rjust(width) for c in document.columns]
        label_width = group_width + name_width + 3
        line_width = label_width + 3 + len("  ".join(header))
        if show_difference:
            line_width += 2 + diff_width
        return {
            "title": "Robustness report",
            "dataset_id": document.dataset_id,
            "metric": document.metric,
            "marked": marked,
            "show_difference": show_difference,
            "header": header,
            "difference_header": difference_header,
            "label_width": label_width,
            "group_width": group_width,
            "name_width": name_width,
            "rows": rows,
            "rule": "-" * line_width,
        }

    def render(self, document: ReportDocument) -> str:
        return self.template.render(**self.context(document))


def render_report(
    records: Sequence[PerfRecord], renderer: Optional[ReportRenderer] = None
) -> Tuple[ReportDocument, str]:
    """Build the report document and its text rendering."""
    document = build_document(records)
    text = (renderer or ReportRenderer()).render(document)
    return document, text


def write_report(records: Sequence[PerfRecord], out_dir: str) -> Tuple[str, str]:
    """
    Write ``report.txt`` and ``report.json`` into ``out_dir``.

    Returns:
        Paths of the text and JSON files
    """
    document, text = render_report(records)
    ensure_dir(out_dir)
    text_path = os.path.join(out_dir, "report.txt")
    with open(text_path, "w", encoding="utf-8") as f:
        f.write(text)
        if not text.endswith("\n"):
            f.write("\n")
    json_path = write_json(os.path.join(out_dir, "report.json"), document.in_percent())
    logger.info(f"Wrote report for {len(records)} record(s) to {out_dir}")
    return text_path, json_path
