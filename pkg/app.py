import json

import streamlit as st

from core.config import CouConfig, SummaryConfig, SynthSpec, TrainConfig
from core.corpus import filter_discussions, parse_corpus
from core.cou_engine import leave_one_out, majority_cou
from core.errors import CorpusValidationError
from core.eval_engine import cross_validate
from core.synth_engine import generate
from core.zip_builder import build_results_zip
from reports.workbook_builder import build_evaluation_workbook
from utils.logging_setup import configure_logging


configure_logging()

st.set_page_config(
    page_title="Joint Phrase & Discourse Analysis",
    page_icon="📊",
    layout="centered"
)

st.title("Joint Phrase & Discourse Analysis")


# =========================================================
# CORPUS
# =========================================================

source = st.selectbox("Corpus Source", ["Upload JSON", "Synthetic"])

discussions = None

if source == "Upload JSON":

    corpus_file = st.file_uploader("Upload Corpus File", type=["json"])

    if corpus_file is not None:
        try:
            discussions = parse_corpus(json.load(corpus_file))
        except (CorpusValidationError, json.JSONDecodeError) as exc:
            st.error(f"Corpus rejected: {exc}")

else:

    n_discussions = st.number_input("Synthetic Discussions", min_value=5, max_value=500, value=30)
    synth_seed = st.number_input("Synthetic Seed", min_value=0, value=0)
    with_cou = st.checkbox("Plant COU Labels", value=False)

    discussions = generate(SynthSpec(
        n_discussions=int(n_discussions),
        seed=int(synth_seed),
        cou=with_cou,
    ))

if discussions is not None:
    min_units = st.number_input("Minimum Units per Discussion", min_value=1, value=1)
    excluded = st.text_input("Excluded Topics (comma separated)", value="")
    discussions = filter_discussions(
        discussions,
        min_units=int(min_units),
        exclude_topics=[topic.strip() for topic in excluded.split(",") if topic.strip()],
    )
    st.caption(f"{len(discussions)} discussions loaded")

st.divider()


# =========================================================
# SETTINGS
# =========================================================

task = st.selectbox("Task", ["phrase", "discourse", "summarization", "cou"])

col1, col2, col3 = st.columns(3)

with col1:
    epochs = st.number_input("Epochs", min_value=1, value=10)
    folds = st.number_input("Folds", min_value=2, value=5)

with col2:
    rounds = st.number_input("Sampling Rounds", min_value=1, value=50)
    runs = st.number_input("Averaged Runs", min_value=1, value=20)

with col3:
    mode = st.selectbox("Relations", ["joint", "latent"])
    seed = st.number_input("Seed", min_value=0, value=0)

decode_mode = st.selectbox("Decoding", ["joint", "separate"])
reference = st.selectbox("Summary Reference", ["abstractive", "extractive"])

train_cfg = TrainConfig(
    epochs=int(epochs),
    rounds=int(rounds),
    runs=int(runs),
    mode=mode,
    seed=int(seed),
)


# =========================================================
# RUN
# =========================================================

if st.button("Run Evaluation") and discussions:

    try:
        with st.spinner("Training and decoding..."):

            reports = {}

            if task == "cou":
                reports["cou"] = leave_one_out(discussions, train_cfg, CouConfig(seed=int(seed)))
                reports["cou-majority"] = majority_cou(discussions)
            else:
                reports[task] = cross_validate(
                    discussions,
                    train_cfg,
                    folds=int(folds),
                    decode_mode=decode_mode,
                    task=task,
                    summary_cfg=SummaryConfig(reference=reference),
                )

        for name, report in reports.items():
            st.subheader(name)
            st.dataframe(report.to_frame())

        zip_buffer = build_results_zip({
            name: {"report": report, "workbook": build_evaluation_workbook(report)}
            for name, report in reports.items()
        })

        st.download_button(
            label="Download Results ZIP",
            data=zip_buffer,
            file_name="evaluation_results.zip",
            mime="application/zip"
        )

    except ValueError as exc:
        st.error(str(exc))
