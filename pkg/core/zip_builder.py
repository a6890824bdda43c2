import json
import zipfile
from io import BytesIO


def safe_filename(name: str):

    return (
        str(name)
        .replace("/", "-")
        .replace("\\", "-")
        .replace(":", "-")
        .strip()
    )


def build_results_zip(
    reports: dict
):
    """
    reports:
        {
            name: {
                "report": EvalReport,
                "workbook": BytesIO | None
            }
        }

    Layout: <name>/report.json, <name>/predictions.json, <name>/<name>.xlsx
    """

    zip_buffer = BytesIO()

    with zipfile.ZipFile(zip_buffer, "w", zipfile.ZIP_DEFLATED) as zip_file:

        for name, data in sorted(reports.items()):

            report = data["report"]
            workbook = data.get("workbook")
            safe_name = safe_filename(name)

            summary = report.to_dict()
            predictions = summary.pop("predictions")

            zip_file.writestr(
                f"{safe_name}/report.json",
                json.dumps(summary, indent=2, sort_keys=True)
            )

            zip_file.writestr(
                f"{safe_name}/predictions.json",
                json.dumps(predictions, indent=2, sort_keys=True)
            )

            if workbook is not None:
                zip_file.writestr(f"{safe_name}/{safe_name}.xlsx", workbook.getvalue())

    zip_buffer.seek(0)

    return zip_buffer
