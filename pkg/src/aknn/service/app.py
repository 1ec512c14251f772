"""HTTP service wrapping the core package.

Long-lived deployments hold registered datasets (and their neighbor indexes)
in memory and serve per-query predictions with full scan traces; experiment
and validator endpoints run synchronously and return rows, rendered CSV, and
a chart in one response. The CLI is a thin client of exactly this API.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..charts import Series, line_chart
from ..classify import predict_binary, predict_multiclass, resolve_single_label, scan_trace
from ..data import DatasetError, LabeledDataset, load_csv_text, split
from ..experiments import (
    K_SWEEP_COLUMNS,
    NOISE_SWEEP_COLUMNS,
    POINTWISE_COLUMNS,
    RISK_COLUMNS,
    config_hash,
    derived_seed,
    k_sweep_rows,
    noise_sweep_rows,
    pointwise_rate_rows,
    risk_rows,
    rows_to_csv,
)
from ..neighbors import NeighborIndex
from ..validate import (
    counterexample_statistic,
    validate_bias_lemma,
    validate_mass_lemma,
    validate_ucecm,
)
from . import schemas

COUNTEREXAMPLE_COLUMNS = ["n", "trials", "median", "mean", "min", "max", "config_hash"]


def _data_error(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail={"code": "data", "message": str(exc)})


def _config_error(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail={"code": "config", "message": str(exc)})


def _resolve_source(source: schemas.DataSource):
    """Returns (train, test, oracle distribution or None)."""
    if source.kind == "csv":
        try:
            ds = load_csv_text(source.csv_text, source.label_column)
            train, test = split(ds, source.test_fraction, seed=source.seed)
        except DatasetError as exc:
            raise _data_error(exc) from exc
        return train, test, None
    dist = source.synthetic.to_distribution()
    train = dist.sample(source.n_train, seed=derived_seed(source.seed, 0))
    test = dist.sample(source.n_test, seed=derived_seed(source.seed, 1))
    return train, test, dist


def _stamp(rows: list, digest: str) -> list:
    for row in rows:
        row["config_hash"] = digest
    return rows


def create_app() -> FastAPI:
    app = FastAPI(title="aknn service", version=__version__)
    datasets: dict[str, dict] = {}
    ids = itertools.count(1)

    # ---- health / datasets -------------------------------------------------

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/datasets", response_model=schemas.DatasetInfo)
    def register_dataset(upload: schemas.DatasetUpload):
        ds = _dataset_from_upload(upload)
        dataset_id = f"ds-{next(ids):04d}"
        datasets[dataset_id] = {"dataset": ds, "indexes": {}}
        return _info(dataset_id, ds)

    @app.get("/datasets", response_model=list[schemas.DatasetInfo])
    def list_datasets():
        return [_info(did, entry["dataset"]) for did, entry in sorted(datasets.items())]

    @app.get("/datasets/{dataset_id}", response_model=schemas.DatasetInfo)
    def get_dataset(dataset_id: str):
        entry = datasets.get(dataset_id)
        if entry is None:
            raise HTTPException(404, detail={"code": "data", "message": f"unknown dataset {dataset_id}"})
        return _info(dataset_id, entry["dataset"])

    @app.delete("/datasets/{dataset_id}")
    def delete_dataset(dataset_id: str):
        if datasets.pop(dataset_id, None) is None:
            raise HTTPException(404, detail={"code": "data", "message": f"unknown dataset {dataset_id}"})
        return {"deleted": dataset_id}

    def _dataset_from_upload(upload: schemas.DatasetUpload) -> LabeledDataset:
        if upload.csv_text is not None:
            try:
                return load_csv_text(upload.csv_text, upload.label_column)
            except DatasetError as exc:
                raise _data_error(exc) from exc
        dist = upload.synthetic.to_distribution()
        return dist.sample(upload.n, seed=upload.seed)

    def _info(dataset_id: str, ds: LabeledDataset) -> schemas.DatasetInfo:
        return schemas.DatasetInfo(
            dataset_id=dataset_id, n=ds.n, dim=ds.dim, alphabet=list(ds.alphabet)
        )

    def _index_for(dataset_id: str, metric: str) -> NeighborIndex:
        entry = datasets.get(dataset_id)
        if entry is None:
            raise HTTPException(404, detail={"code": "data", "message": f"unknown dataset {dataset_id}"})
        if metric not in entry["indexes"]:
            entry["indexes"][metric] = NeighborIndex(entry["dataset"], metric)
        return entry["indexes"][metric]

    # ---- prediction ----------------------------------------------------------

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest):
        if req.dataset_id is not None:
            index = _index_for(req.dataset_id, req.metric)
        else:
            index = NeighborIndex(_dataset_from_upload(req.data), req.metric)
        try:
            profile = index.profile(req.query, exclude_self=req.exclude_self, max_k=req.max_k)
            rule = req.rule.to_rule()
            predictor = predict_binary if req.mode == "binary" else predict_multiclass
            pred = predictor(profile, rule)
            trace = scan_trace(profile, rule, req.mode)
        except ValueError as exc:
            raise _config_error(exc) from exc
        resolved = None
        if req.resolve and (pred.labels is None or len(pred.labels) > 1):
            resolved = str(resolve_single_label(profile))
        return schemas.PredictResponse(
            labels=[str(lab) for lab in pred.labels] if pred.labels is not None else None,
            chosen_k=pred.chosen_k,
            margin=pred.margin,
            abstained=pred.is_abstain,
            resolved_label=resolved,
            trace=[schemas.TraceRow(**row) for row in trace],
        )

    # ---- experiments -----------------------------------------------------------

    @app.post("/experiments/sweep-noise", response_model=schemas.SweepResponse)
    def sweep_noise(req: schemas.NoiseSweepRequest):
        train, test, oracle = _resolve_source(req.data)
        digest = config_hash(req.model_dump())
        try:
            rows = noise_sweep_rows(
                train, test, req.noise_levels, req.k_list, req.a_list,
                seed=req.seed, metric=req.metric, resolve=req.resolve, oracle=oracle,
            )
        except ValueError as exc:
            raise _config_error(exc) from exc
        _stamp(rows, digest)
        series = []
        for p in req.noise_levels:
            pts = [(r["param"], r["accuracy"]) for r in rows
                   if r["method"] == "knn" and r["noise"] == p and r["accuracy"] != ""]
            if pts:
                series.append(Series(f"knn p={p:g}", pts))
        for p in req.noise_levels:
            for a in req.a_list:
                acc = [r["accuracy"] for r in rows
                       if r["method"] == "aknn" and r["noise"] == p and r["param"] == a]
                if acc and acc[0] != "" and req.k_list:
                    ks = [min(req.k_list), max(req.k_list)]
                    series.append(Series(f"aknn a={a:g} p={p:g}", [(k, acc[0]) for k in ks], dashed=True))
        if series:
            svg = line_chart(series, title="accuracy under label noise",
                             x_label="k", y_label="accuracy")
        else:
            # no fixed-k axis to plot against: chart adaptive accuracy vs noise
            for a in req.a_list:
                pts = [(r["noise"], r["accuracy"]) for r in rows
                       if r["method"] == "aknn" and r["param"] == a and r["accuracy"] != ""]
                if pts:
                    series.append(Series(f"aknn a={a:g}", pts))
            svg = line_chart(series, title="accuracy under label noise",
                             x_label="noise level", y_label="accuracy")
        return schemas.SweepResponse(
            rows=rows, csv=rows_to_csv(rows, NOISE_SWEEP_COLUMNS), chart_svg=svg, config_hash=digest
        )

    @app.post("/experiments/sweep-k", response_model=schemas.SweepResponse)
    def sweep_k(req: schemas.KSweepRequest):
        train, test, oracle = _resolve_source(req.data)
        digest = config_hash(req.model_dump())
        try:
            rows = k_sweep_rows(
                train, test, req.a_list, req.k_caps,
                seed=req.seed, metric=req.metric, mode=req.mode, oracle=oracle,
            )
        except ValueError as exc:
            raise _config_error(exc) from exc
        _stamp(rows, digest)
        series = []
        for a in req.a_list:
            acc = [(r["max_k"], r["accuracy"]) for r in rows
                   if r["method"] == "aknn" and r["a"] == a and r["accuracy"] != ""]
            cov = [(r["max_k"], r["coverage"]) for r in rows
                   if r["method"] == "aknn" and r["a"] == a]
            if acc:
                series.append(Series(f"aknn acc a={a:g}", acc))
            series.append(Series(f"aknn cov a={a:g}", cov, dashed=True))
        knn_pts = [(r["max_k"], r["accuracy"]) for r in rows if r["method"] == "knn"]
        if knn_pts:
            series.append(Series("knn", knn_pts))
        svg = line_chart(series, title="accuracy and coverage vs neighborhood cap",
                         x_label="max k", y_label="accuracy / coverage")
        return schemas.SweepResponse(
            rows=rows, csv=rows_to_csv(rows, K_SWEEP_COLUMNS), chart_svg=svg, config_hash=digest
        )

    @app.post("/experiments/rates", response_model=schemas.RatesResponse)
    def rates(req: schemas.RatesRequest):
        dist = req.distribution.to_distribution()
        digest = config_hash(req.model_dump())
        try:
            pw = pointwise_rate_rows(
                dist, req.points, req.n_schedule, req.replicas,
                req.rule.to_rule(), seed=req.seed,
            )
            rk = risk_rows(
                dist, req.risk_n_schedule, req.risk_replicas, req.risk_rule.to_rule(),
                eval_size=req.risk_eval_size, seed=req.seed,
            )
        except ValueError as exc:
            raise _config_error(exc) from exc
        _stamp(pw, digest)
        _stamp(rk, digest)
        pw_series = []
        for x in req.points:
            pts = [(math.log2(r["n"]), r["error_rate"]) for r in pw if r["x"] == x]
            pw_series.append(Series(f"x={x:g}", pts))
        pw_svg = line_chart(pw_series, title="pointwise disagreement with the optimal label",
                            x_label="log2 n", y_label="error rate")
        rk_series = [
            Series("risk", [(r["n"], r["risk"]) for r in rk]),
            Series("optimal", [(r["n"], r["bayes_risk"]) for r in rk], dashed=True),
        ]
        rk_svg = line_chart(rk_series, title="risk trajectory (abstentions count as errors)",
                            x_label="n", y_label="risk")
        return schemas.RatesResponse(
            pointwise_rows=pw, pointwise_csv=rows_to_csv(pw, POINTWISE_COLUMNS),
            pointwise_chart_svg=pw_svg,
            risk_rows=rk, risk_csv=rows_to_csv(rk, RISK_COLUMNS), risk_chart_svg=rk_svg,
            config_hash=digest,
        )

    # ---- validators ----------------------------------------------------------------

    def _validation_response(report) -> schemas.ValidationResponse:
        return schemas.ValidationResponse(
            trials=report.trials,
            violations=report.violations,
            empirical_failure_rate=report.empirical_failure_rate,
            bound_delta=report.bound_delta,
            worst_gap=report.worst_gap if math.isfinite(report.worst_gap) else None,
            config=report.config,
        )

    @app.post("/validate/ucecm", response_model=schemas.ValidationResponse)
    def run_ucecm(req: schemas.UcecmRequest):
        dist = req.distribution.to_distribution()
        try:
            report = validate_ucecm(dist, req.n, req.trials, req.delta, req.m, seed=req.seed)
        except ValueError as exc:
            raise _config_error(exc) from exc
        return _validation_response(report)

    @app.post("/validate/bias-lemma", response_model=schemas.ValidationResponse)
    def run_bias(req: schemas.BiasLemmaRequest):
        dist = req.distribution.to_distribution()
        try:
            report = validate_bias_lemma(
                dist, req.n, req.trials, req.delta, req.c1, req.m,
                seed=req.seed, include_log_n=req.include_log_n,
            )
        except ValueError as exc:
            raise _config_error(exc) from exc
        return _validation_response(report)

    @app.post("/validate/mass-lemma", response_model=schemas.ValidationResponse)
    def run_mass(req: schemas.MassLemmaRequest):
        dist = req.distribution.to_distribution()
        try:
            report = validate_mass_lemma(
                dist, req.n, req.trials, req.delta, req.c_o, req.m, seed=req.seed
            )
        except ValueError as exc:
            raise _config_error(exc) from exc
        return _validation_response(report)

    @app.post("/validate/counterexample", response_model=schemas.CounterexampleResponse)
    def run_counterexample(req: schemas.CounterexampleRequest):
        digest = config_hash(req.model_dump())
        rows = []
        for n in req.n_values:
            stats = counterexample_statistic(n, req.trials, seed=req.seed)
            rows.append({
                "n": int(n), "trials": req.trials,
                "median": float(np.median(stats)), "mean": float(np.mean(stats)),
                "min": float(np.min(stats)), "max": float(np.max(stats)),
            })
        _stamp(rows, digest)
        series = [Series("median", [(math.log10(r["n"]), r["median"]) for r in rows])]
        svg = line_chart(series, title="scaled single-color deviation grows with n",
                         x_label="log10 n", y_label="median statistic")
        return schemas.CounterexampleResponse(
            rows=rows, csv=rows_to_csv(rows, COUNTEREXAMPLE_COLUMNS),
            chart_svg=svg, config_hash=digest,
        )

    return app


app = create_app()
