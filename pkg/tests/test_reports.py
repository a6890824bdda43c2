import json
import zipfile

import pytest
from openpyxl import load_workbook

from core.eval_engine import EvalReport
from core.zip_builder import build_results_zip, safe_filename
from reports.workbook_builder import build_evaluation_workbook


@pytest.fixture
def phrase_report():
    report = EvalReport(
        task="phrase",
        folds=[{"fold": 1, "phrase_f1": 0.9, "model_length": 4.0}, {"fold": 2, "phrase_f1": 0.3, "model_length": 6.0}],
        predictions=[{
            "discussion": "d1",
            "phrases": [{"unit": 2, "ranges": [[0, 2]], "surface": "the battery", "type": "NP", "head": "battery"}],
            "relations": {"2": "elaboration", "10": "positive", "3": "negative"},
            "score": 1.5,
        }],
        weights=[{"fold": 1, "top": {"c": [["c:type=NP", 1.2]], "d": [["d:bias|rel=positive", -0.4]], "cd": []}}],
        settings={"folds": 2, "seed": 0},
    )
    return report.finalize()


class TestWorkbook:

    def test_sheets(self, phrase_report):
        workbook = load_workbook(build_evaluation_workbook(phrase_report))
        assert workbook.sheetnames == ["Metrics", "Phrases", "Relations", "Top Weights", "Metadata"]

    def test_metrics_sheet_has_mean_row(self, phrase_report):
        sheet = load_workbook(build_evaluation_workbook(phrase_report))["Metrics"]
        rows = list(sheet.values)

        assert rows[0] == ("fold", "phrase_f1", "model_length")
        assert rows[-1][0] == "mean"
        assert rows[-1][1] == pytest.approx(0.6)

    def test_relations_in_unit_order(self, phrase_report):
        sheet = load_workbook(build_evaluation_workbook(phrase_report))["Relations"]
        assert [row[1] for row in sheet.iter_rows(min_row=2, values_only=True)] == [2, 3, 10]

    def test_weight_descriptions(self, phrase_report):
        sheet = load_workbook(build_evaluation_workbook(phrase_report))["Top Weights"]
        rows = list(sheet.iter_rows(min_row=2, values_only=True))

        assert rows[0] == (1, "content", 1, "c:type=NP", "phrase type NP", 1.2)
        assert rows[1][1] == "discourse"

    def test_metadata(self, phrase_report):
        sheet = load_workbook(build_evaluation_workbook(phrase_report, title="Run A"))["Metadata"]
        rows = {row[0]: row[1] for row in sheet.iter_rows(min_row=5, max_col=2, values_only=True) if row[0]}

        assert sheet["A1"].value == "Run A"
        assert rows["Task"] == "phrase"
        assert rows["folds"] == 2
        assert rows["Settings"] is None
        assert rows["phrase_f1"] == pytest.approx(0.6)

    def test_cou_report_has_feature_sheet(self):
        report = EvalReport(
            task="cou",
            folds=[{"discussion": "d1", "gold": "consistent", "predicted": "consistent"}],
            predictions=[{"discussion": "d1", "label": "consistent", "prob_diff": 0.1}],
        )
        report.aggregate = {"accuracy": 1.0, "f1": 0.0}

        workbook = load_workbook(build_evaluation_workbook(report))
        assert "COU Features" in workbook.sheetnames
        assert "Phrases" not in workbook.sheetnames


class TestZip:

    def test_layout(self, phrase_report):
        buffer = build_results_zip({
            "phrase": {"report": phrase_report, "workbook": build_evaluation_workbook(phrase_report)},
            "cou/majority": {"report": phrase_report, "workbook": None},
        })

        with zipfile.ZipFile(buffer) as archive:
            names = sorted(archive.namelist())
            report = json.loads(archive.read("phrase/report.json"))
            predictions = json.loads(archive.read("phrase/predictions.json"))

        assert names == [
            "cou-majority/predictions.json",
            "cou-majority/report.json",
            "phrase/phrase.xlsx",
            "phrase/predictions.json",
            "phrase/report.json",
        ]
        assert "predictions" not in report
        assert report["aggregate"]["phrase_f1"] == pytest.approx(0.6)
        assert predictions[0]["discussion"] == "d1"

    def test_safe_filename(self):
        assert safe_filename(" a/b:c ") == "a-b-c"
