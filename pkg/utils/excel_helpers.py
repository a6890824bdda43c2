# utils/excel_helpers.py

import math

from openpyxl.utils import get_column_letter
from openpyxl.styles import PatternFill, Font, Alignment, Border, Side


SCORE_COLORS = {
    "Critical": "FF4C4C",
    "Low": "FFA500",
    "Medium": "FFD966",
    "Good": "8BC34A",
}


def auto_fit_columns(ws):
    for column in ws.columns:
        max_length = 0
        column_letter = get_column_letter(column[0].column)

        for cell in column:
            if cell.value is not None:
                max_length = max(max_length, len(str(cell.value)))

        adjusted_width = max(12, min(max_length + 3, 50))
        ws.column_dimensions[column_letter].width = adjusted_width


def apply_header_style(ws):

    header_fill = PatternFill(
        start_color="1F4E78",
        end_color="1F4E78",
        fill_type="solid"
    )

    header_font = Font(
        bold=True,
        color="FFFFFF"
    )

    thin_border = Border(
        left=Side(style='thin'),
        right=Side(style='thin'),
        top=Side(style='thin'),
        bottom=Side(style='thin')
    )

    for cell in ws[1]:
        cell.fill = header_fill
        cell.font = header_font
        cell.alignment = Alignment(horizontal="center", vertical="center")
        cell.border = thin_border

    ws.freeze_panes = "A2"


def score_status(value):
    """Bucket a metric in [0, 1]."""

    if value >= 0.8:
        return "Good"
    if value >= 0.6:
        return "Medium"
    if value >= 0.4:
        return "Low"
    return "Critical"


def get_score_fill(value):

    color = SCORE_COLORS.get(score_status(value), "FFFFFF")

    return PatternFill(
        start_color=color,
        end_color=color,
        fill_type="solid"
    )


def format_score_cell(cell):
    cell.number_format = '0.000'


def cell_value(value):
    """openpyxl cannot store NaN, tuples or dicts; convert them."""

    if value is None:
        return None
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, (list, tuple, dict, set)):
        return str(value)
    return value


def write_frame(ws, frame):
    """Append a DataFrame (header row first) to a worksheet."""

    ws.append([str(column) for column in frame.columns])

    for row in frame.itertuples(index=False):
        ws.append([cell_value(value) for value in row])

    apply_header_style(ws)
