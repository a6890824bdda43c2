from datetime import datetime

from openpyxl.styles import PatternFill, Font, Alignment

from utils.excel_helpers import auto_fit_columns, cell_value


TOOL_NAME = "Joint Phrase & Discourse Toolkit"
TOOL_VERSION = "v1.0"

BANNER_COLOR = "0A1F5C"


def _section(ws, row, label):

    ws.cell(row=row, column=1, value=label).font = Font(bold=True, size=12, color=BANNER_COLOR)

    return row + 1


def create_metadata_sheet(wb, report_title, task, settings, aggregate=None):
    """
    Banner with the report title, then the run description and every
    training / evaluation setting as label-value rows.
    """

    ws = wb.create_sheet("Metadata")

    # =========================================
    # BANNER
    # =========================================

    banner = PatternFill(start_color=BANNER_COLOR, end_color=BANNER_COLOR, fill_type="solid")

    for row in ws.iter_rows(min_row=1, max_row=3, min_col=1, max_col=4):
        for cell in row:
            cell.fill = banner

    ws.merge_cells("A1:D3")

    ws["A1"] = report_title
    ws["A1"].font = Font(name="Arial Black", size=18, bold=True, color="FFFFFF")
    ws["A1"].alignment = Alignment(horizontal="center", vertical="center")

    # =========================================
    # RUN
    # =========================================

    row = _section(ws, 5, "Run")

    for label, value in (
        ("Tool", TOOL_NAME),
        ("Version", TOOL_VERSION),
        ("Task", task),
        ("Generated At", datetime.now().strftime("%Y-%m-%d %H:%M:%S")),
    ):
        ws.cell(row=row, column=1, value=label).font = Font(bold=True)
        ws.cell(row=row, column=2, value=value)
        row += 1

    # =========================================
    # SETTINGS / RESULTS
    # =========================================

    for title, values in (("Settings", settings), ("Mean Results", aggregate or {})):
        if not values:
            continue

        row = _section(ws, row + 1, title)

        for name in sorted(values):
            ws.cell(row=row, column=1, value=name).font = Font(bold=True)
            ws.cell(row=row, column=2, value=cell_value(values[name]))
            row += 1

    auto_fit_columns(ws)

    return ws
