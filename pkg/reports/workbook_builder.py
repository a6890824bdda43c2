from openpyxl import Workbook
from io import BytesIO

from reports.metrics_sheet import create_metrics_sheet
from reports.predictions_sheet import (
    create_features_sheet,
    create_phrases_sheet,
    create_relations_sheet,
)
from reports.weights_sheet import create_weights_sheet
from reports.metadata_sheet import create_metadata_sheet


def build_evaluation_workbook(report, title=None):

    wb = Workbook()

    # Remove default sheet
    if "Sheet" in wb.sheetnames:
        wb.remove(wb["Sheet"])

    # ============================
    # METRICS SHEET
    # ============================

    create_metrics_sheet(wb, report)

    # ============================
    # PREDICTION SHEETS
    # ============================

    if report.task == "cou":
        if report.predictions:
            create_features_sheet(wb, report.predictions)
    else:
        create_phrases_sheet(wb, report.predictions)
        create_relations_sheet(wb, report.predictions)

    # ============================
    # WEIGHTS SHEET
    # ============================

    if report.weights:
        create_weights_sheet(wb, report.weights)

    # ============================
    # METADATA SHEET
    # ============================

    create_metadata_sheet(
        wb,
        title or f"{report.task.title()} Evaluation",
        report.task,
        report.settings,
        report.aggregate,
    )

    # ============================
    # RETURN BUFFER
    # ============================

    buffer = BytesIO()
    wb.save(buffer)
    buffer.seek(0)

    return buffer
