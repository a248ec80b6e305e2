"""
Text tables for evaluation results, two-decimal percentages.
"""

from typing import Dict

from src.data.records import StanceLabel
from src.evaluation.metrics import EvalReport
from src.evaluation.significance import McNemarResult

_GROUPS = ("Supporting", "Opposing", "Overall (Macro)")


def _row_values(report: EvalReport) -> list:
    support = report.per_class[StanceLabel.SUPPORT]
    oppose = report.per_class[StanceLabel.OPPOSE]
    return [
        support.precision, support.recall, support.f1,
        oppose.precision, oppose.recall, oppose.f1,
        report.macro_precision, report.macro_recall, report.macro_f1,
    ]


def format_results_table(reports: Dict[str, EvalReport]) -> str:
    """One row per system: per-class and macro precision / recall / F1."""
    name_width = max([len("Approach")] + [len(n) for n in reports]) + 2
    group_width = 3 * 9
    top = " " * name_width + "".join(f"{g:^{group_width}}" for g in _GROUPS)
    sub = f"{'Approach':<{name_width}}" + ("{:>9}{:>9}{:>9}".format("Prec.", "Recall", "F1") * 3)
    lines = [top, sub, "-" * len(sub)]
    for name, report in reports.items():
        values = "".join(f"{v:>9.2f}" for v in _row_values(report))
        lines.append(f"{name:<{name_width}}{values}")
    return "\n".join(lines)


def format_eval_table(report: EvalReport, name: str = "model") -> str:
    """Results row plus accuracy, confusion matrix and any zero-division flags."""
    matrix = report.confusion
    lines = [
        format_results_table({name: report}),
        "",
        f"Accuracy: {report.accuracy:.2f}",
        "Confusion (rows gold, columns predicted):",
        f"{'':>10}{'SUPPORT':>10}{'OPPOSE':>10}",
        f"{'SUPPORT':>10}{matrix[0][0]:>10}{matrix[0][1]:>10}",
        f"{'OPPOSE':>10}{matrix[1][0]:>10}{matrix[1][1]:>10}",
    ]
    lines.extend(f"Note: {flag}" for flag in report.flags)
    return "\n".join(lines)


def format_mcnemar(result: McNemarResult) -> str:
    method = "exact binomial" if result.exact else "chi-square, continuity-corrected"
    return (
        f"McNemar ({method}): b={result.b_count} c={result.c_count} "
        f"statistic={result.statistic:.4f} p-value={result.p_value:.4e}"
    )
