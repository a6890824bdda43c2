from openpyxl.styles import Font, PatternFill

from utils.excel_helpers import (
    auto_fit_columns,
    format_score_cell,
    get_score_fill,
    write_frame,
)


# Metrics outside [0, 1] are not colour-coded.
UNBOUNDED_SUFFIXES = ("length",)


def create_metrics_sheet(wb, report):

    ws = wb.create_sheet("Metrics")

    frame = report.to_frame()
    write_frame(ws, frame)

    headers = [cell.value for cell in ws[1]]

    for row in ws.iter_rows(min_row=2, max_row=ws.max_row):
        for cell in row:
            name = headers[cell.column - 1]
            if not isinstance(cell.value, float):
                continue
            format_score_cell(cell)
            if not name.endswith(UNBOUNDED_SUFFIXES) and 0.0 <= cell.value <= 1.0:
                cell.fill = get_score_fill(cell.value)

    # mean row in bold on a light band
    if report.aggregate and ws.max_row > 1:
        band = PatternFill(start_color="E9EEF7", end_color="E9EEF7", fill_type="solid")
        for cell in ws[ws.max_row]:
            cell.font = Font(bold=True)
            if not isinstance(cell.value, float):
                cell.fill = band

    auto_fit_columns(ws)

    return ws
