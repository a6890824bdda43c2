from openpyxl.styles import Font

from utils.excel_helpers import apply_header_style, auto_fit_columns, format_score_cell
from core.feature_engine import describe_feature


BLOCK_NAMES = {
    "c": "content",
    "d": "discourse",
    "cd": "joint",
}


def create_weights_sheet(wb, weights):
    """
    weights:
        [{"fold": 1, "top": {"c": [[feature_id, value], ...], "d": [...], "cd": [...]}}, ...]
    """

    ws = wb.create_sheet("Top Weights")

    ws.append(["Fold", "Block", "Rank", "Feature", "Description", "Weight"])
    apply_header_style(ws)

    for entry in weights:
        for block, ranked in entry["top"].items():
            for rank, (feature_id, value) in enumerate(ranked, start=1):
                ws.append([
                    entry["fold"],
                    BLOCK_NAMES.get(block, block),
                    rank,
                    feature_id,
                    describe_feature(feature_id),
                    value,
                ])

                weight_cell = ws.cell(row=ws.max_row, column=6)
                format_score_cell(weight_cell)
                if value < 0:
                    weight_cell.font = Font(color="C00000")

    auto_fit_columns(ws)

    return ws
