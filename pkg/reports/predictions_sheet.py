import pandas as pd

from utils.excel_helpers import auto_fit_columns, write_frame


def create_phrases_sheet(wb, predictions):

    ws = wb.create_sheet("Phrases")

    rows = []
    for prediction in predictions:
        for phrase in prediction["phrases"]:
            rows.append({
                "Discussion": prediction["discussion"],
                "Unit": phrase["unit"],
                "Phrase": phrase["surface"],
                "Type": phrase["type"],
                "Head": phrase["head"],
            })

    frame = pd.DataFrame(rows, columns=["Discussion", "Unit", "Phrase", "Type", "Head"])
    write_frame(ws, frame)
    auto_fit_columns(ws)

    return ws


def create_relations_sheet(wb, predictions):

    ws = wb.create_sheet("Relations")

    rows = []
    for prediction in predictions:
        for unit, relation in sorted(prediction["relations"].items(), key=lambda item: int(item[0])):
            rows.append({"Discussion": prediction["discussion"], "Unit": int(unit), "Relation": relation})

    frame = pd.DataFrame(rows, columns=["Discussion", "Unit", "Relation"])
    write_frame(ws, frame)
    auto_fit_columns(ws)

    return ws


def create_features_sheet(wb, rows, title="COU Features"):

    ws = wb.create_sheet(title)

    write_frame(ws, pd.DataFrame(rows))
    auto_fit_columns(ws)

    return ws
