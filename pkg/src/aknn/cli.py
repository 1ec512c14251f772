"""Command-line client for the HTTP service.

Every subcommand builds a request from a flat key=value config file (plus
``--set`` overrides), sends it to the service, and writes the returned CSV,
SVG, and JSON artifacts. Without ``--server`` the app runs in-process over
an ASGI transport, so the CLI works standalone while staying a pure client
of the HTTP API.

Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx


class CliError(click.ClickException):
    """Error with the documented exit code: 1 configuration, 2 data."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"config line {lineno}: expected key = value", 1)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(config_path: str | None, overrides: tuple) -> dict:
    cfg = {}
    if config_path:
        try:
            cfg = parse_config_text(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise CliError(f"config file not found: {config_path}", 1) from None
    for item in overrides:
        if "=" not in item:
            raise CliError(f"--set needs key=value, got {item!r}", 1)
        key, value = item.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def parse_int_list(text: str) -> list:
    """Comma list of ints; a:b:c expands to the inclusive range a..b step c."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            parts = tok.split(":")
            if len(parts) not in (2, 3):
                raise CliError(f"bad range {tok!r} (use start:stop[:step])", 1)
            try:
                start, stop = int(parts[0]), int(parts[1])
                step = int(parts[2]) if len(parts) == 3 else 1
            except ValueError:
                raise CliError(f"bad range {tok!r}", 1) from None
            if step < 1:
                raise CliError(f"range step must be positive in {tok!r}", 1)
            out.extend(range(start, stop + 1, step))
        else:
            try:
                out.append(int(tok))
            except ValueError:
                raise CliError(f"bad integer {tok!r}", 1) from None
    return out


def parse_float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"bad float list {text!r}", 1) from None


def parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise CliError(f"bad boolean {text!r}", 1)


def _read_file(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"{what} not found: {path}", 2) from None


def synthetic_spec(cfg: dict) -> dict:
    dist = cfg.get("distribution", "step")
    if dist.startswith("file:"):
        return {"text": _read_file(dist[5:], "distribution file")}
    if dist != "step":
        raise CliError(f"unknown distribution {dist!r} (use 'step' or 'file:PATH')", 1)
    return {
        "name": "step",
        "noise": float(cfg.get("dist_noise", "0")),
        "boundary": float(cfg.get("dist_boundary", "0.5")),
    }


def data_source(cfg: dict) -> dict:
    kind = cfg.get("data", "synthetic")
    if kind == "csv":
        if "csv_path" not in cfg:
            raise CliError("csv data source needs csv_path", 1)
        return {
            "kind": "csv",
            "csv_text": _read_file(cfg["csv_path"], "csv file"),
            "label_column": cfg.get("label_column", "label"),
            "test_fraction": float(cfg.get("test_fraction", "0.3")),
            "seed": int(cfg.get("seed", "0")),
        }
    if kind == "synthetic":
        return {
            "kind": "synthetic",
            "synthetic": synthetic_spec(cfg),
            "n_train": int(cfg.get("n_train", "1000")),
            "n_test": int(cfg.get("n_test", "500")),
            "seed": int(cfg.get("seed", "0")),
        }
    raise CliError(f"unknown data source {kind!r}", 1)


def rule_spec(cfg: dict, prefix: str = "rule_") -> dict:
    return {
        "variant": cfg.get(prefix + "variant", "practical"),
        "a": float(cfg.get(prefix + "a", "1.0")),
        "c1": float(cfg.get(prefix + "c1", "2.0")),
        "delta": float(cfg.get(prefix + "delta", "0.1")),
        "d0": int(cfg.get(prefix + "d0", "2")),
    }


# ---------------------------------------------------------------------------
# service client
# ---------------------------------------------------------------------------

class ServiceClient:
    """POST/GET against a live server, or in-process over ASGI when no
    server address is given."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None

    def request(self, method: str, path: str, payload: dict | None = None) -> dict:
        if self.server:
            try:
                with httpx.Client(base_url=self.server, timeout=600.0) as client:
                    response = client.request(method, path, json=payload)
            except httpx.HTTPError as exc:
                raise CliError(f"cannot reach server {self.server}: {exc}", 2) from exc
        else:
            response = asyncio.run(self._asgi_request(method, path, payload))
        return self._handle(response)

    async def _asgi_request(self, method: str, path: str, payload: dict | None):
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://aknn.local") as client:
            return await client.request(method, path, json=payload)

    @staticmethod
    def _handle(response: httpx.Response) -> dict:
        if response.status_code == 200:
            return response.json()
        if response.status_code == 422:
            raise CliError(f"invalid configuration: {response.text}", 1)
        try:
            detail = response.json().get("detail", {})
        except Exception:
            detail = {}
        code = detail.get("code") if isinstance(detail, dict) else None
        message = detail.get("message") if isinstance(detail, dict) else response.text
        if response.status_code == 404 or code == "data":
            raise CliError(f"data error: {message}", 2)
        if code == "config":
            raise CliError(f"configuration error: {message}", 1)
        raise CliError(f"server error {response.status_code}: {response.text}", 2)


def _write(out_dir: str, name: str, content: str) -> None:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(content, encoding="utf-8")
    click.echo(f"wrote {path / name}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@click.group()
@click.option("--server", envvar="AKNN_SERVER", default=None,
              help="Service base URL; omit to run the service in-process.")
@click.pass_context
def main(ctx, server):
    """Adaptive nearest-neighbor experiments over the aknn service."""
    ctx.obj = ServiceClient(server)


common_options = [
    click.option("--config", "config_path", default=None, help="Flat key=value config file."),
    click.option("--set", "overrides", multiple=True, help="Override a config key (key=value)."),
    click.option("--out", "out_dir", default=".", help="Output directory for artifacts."),
]


def with_common(fn):
    for opt in reversed(common_options):
        fn = opt(fn)
    return fn


@main.command("sweep-noise")
@with_common
@click.pass_obj
def sweep_noise(client, config_path, overrides, out_dir):
    """Fixed-k vs adaptive accuracy across label-noise levels."""
    cfg = load_config(config_path, overrides)
    payload = {
        "data": data_source(cfg),
        "noise_levels": parse_float_list(cfg.get("noise_levels", "0,0.2,0.4")),
        "k_list": parse_int_list(cfg.get("k_list", "1:101:2")),
        "a_list": parse_float_list(cfg.get("a_list", "2")),
        "seed": int(cfg.get("seed", "0")),
        "metric": cfg.get("metric", "euclidean"),
        "resolve": parse_bool(cfg.get("resolve", "true")),
    }
    result = client.request("POST", "/experiments/sweep-noise", payload)
    _write(out_dir, "sweep_noise.csv", result["csv"])
    _write(out_dir, "sweep_noise.svg", result["chart_svg"])
    click.echo(f"config hash {result['config_hash']}")


@main.command("sweep-k")
@with_common
@click.pass_obj
def sweep_k(client, config_path, overrides, out_dir):
    """Adaptive accuracy and coverage under a neighborhood-size cap."""
    cfg = load_config(config_path, overrides)
    payload = {
        "data": data_source(cfg),
        "a_list": parse_float_list(cfg.get("a_list", "0.5,1,2")),
        "k_caps": parse_int_list(cfg.get("k_caps", "1,2,4,8,16,32,64,128")),
        "seed": int(cfg.get("seed", "0")),
        "metric": cfg.get("metric", "euclidean"),
        "mode": cfg.get("mode", "binary"),
    }
    result = client.request("POST", "/experiments/sweep-k", payload)
    _write(out_dir, "sweep_k.csv", result["csv"])
    _write(out_dir, "sweep_k.svg", result["chart_svg"])
    click.echo(f"config hash {result['config_hash']}")


@main.command("rates")
@with_common
@click.pass_obj
def rates(client, config_path, overrides, out_dir):
    """Pointwise error decay and the risk trajectory on a synthetic instance."""
    cfg = load_config(config_path, overrides)
    payload = {
        "distribution": synthetic_spec(cfg),
        "points": parse_float_list(cfg.get("points", "0.25")),
        "n_schedule": parse_int_list(cfg.get("n_schedule", "16,32,64,128,256,512,1024,2048,4096")),
        "replicas": int(cfg.get("replicas", "200")),
        "rule": rule_spec(cfg, "rule_") | {"variant": cfg.get("rule_variant", "theory-default")},
        "risk_n_schedule": parse_int_list(cfg.get("risk_n_schedule", "500,2000,8000")),
        "risk_replicas": int(cfg.get("risk_replicas", "10")),
        "risk_eval_size": int(cfg.get("risk_eval_size", "2000")),
        "risk_rule": rule_spec(cfg, "risk_rule_"),
        "seed": int(cfg.get("seed", "0")),
    }
    result = client.request("POST", "/experiments/rates", payload)
    _write(out_dir, "rates_pointwise.csv", result["pointwise_csv"])
    _write(out_dir, "rates_pointwise.svg", result["pointwise_chart_svg"])
    _write(out_dir, "rates_risk.csv", result["risk_csv"])
    _write(out_dir, "rates_risk.svg", result["risk_chart_svg"])
    click.echo(f"config hash {result['config_hash']}")


@main.command("validate")
@click.option("--kind", type=click.Choice(["ucecm", "bias-lemma", "mass-lemma", "counterexample"]),
              default="ucecm")
@with_common
@click.pass_obj
def validate(client, kind, config_path, overrides, out_dir):
    """Monte-Carlo checks of the concentration bounds and the counterexample."""
    cfg = load_config(config_path, overrides)
    if kind == "counterexample":
        payload = {
            "n_values": parse_int_list(cfg.get("n_values", "10,100,1000,10000")),
            "trials": int(cfg.get("trials", "200")),
            "seed": int(cfg.get("seed", "0")),
        }
        result = client.request("POST", "/validate/counterexample", payload)
        _write(out_dir, "counterexample.csv", result["csv"])
        _write(out_dir, "counterexample.svg", result["chart_svg"])
        click.echo(f"config hash {result['config_hash']}")
        return
    payload = {
        "distribution": synthetic_spec(cfg),
        "n": int(cfg.get("n", "2000")),
        "trials": int(cfg.get("trials", "200")),
        "delta": float(cfg.get("delta", "0.1")),
        "m": int(cfg.get("m", "20")),
        "seed": int(cfg.get("seed", "0")),
    }
    if kind == "bias-lemma":
        payload["c1"] = float(cfg.get("c1", "2.0"))
        payload["include_log_n"] = parse_bool(cfg.get("include_log_n", "true"))
    if kind == "mass-lemma":
        payload["c_o"] = float(cfg.get("c_o", "1.0"))
    result = client.request("POST", f"/validate/{kind}", payload)
    name = f"validate_{kind.replace('-', '_')}.json"
    _write(out_dir, name, json.dumps(result, indent=2, sort_keys=True))
    click.echo(
        f"{kind}: failure rate {result['empirical_failure_rate']:.4f} "
        f"(budget {result['bound_delta']:.4f}) over {result['trials']} trials"
    )


@main.command("predict")
@click.option("--query", required=True, help="Comma-separated query coordinates.")
@click.option("--csv", "csv_path", default=None, help="Training data CSV.")
@click.option("--label-column", default="label")
@click.option("--synthetic", "synthetic_name", default=None,
              help="Synthetic training source ('step').")
@click.option("--noise", default=0.0, type=float)
@click.option("--n", default=500, type=int, help="Synthetic training size.")
@click.option("--seed", default=0, type=int)
@click.option("--rule", "variant", type=click.Choice(["practical", "theory-default", "theory-vc"]),
              default="practical")
@click.option("--a", default=1.0, type=float)
@click.option("--c1", default=2.0, type=float)
@click.option("--delta", default=0.1, type=float)
@click.option("--d0", default=2, type=int)
@click.option("--mode", type=click.Choice(["binary", "multiclass"]), default="binary")
@click.option("--metric", type=click.Choice(["euclidean", "manhattan"]), default="euclidean")
@click.option("--max-k", default=None, type=int)
@click.option("--exclude-self", is_flag=True)
@click.option("--resolve", is_flag=True, help="Also report the single-label fallback.")
@click.pass_obj
def predict(client, query, csv_path, label_column, synthetic_name, noise, n, seed,
            variant, a, c1, delta, d0, mode, metric, max_k, exclude_self, resolve):
    """Classify one query and print the full stopping-rule scan."""
    if (csv_path is None) == (synthetic_name is None):
        raise CliError("give exactly one of --csv or --synthetic", 1)
    if csv_path is not None:
        data = {"csv_text": _read_file(csv_path, "csv file"), "label_column": label_column}
    else:
        if synthetic_name != "step":
            raise CliError(f"unknown synthetic source {synthetic_name!r}", 1)
        data = {"synthetic": {"name": "step", "noise": noise}, "n": n, "seed": seed}
    payload = {
        "data": data,
        "query": [float(tok) for tok in query.split(",") if tok.strip()],
        "rule": {"variant": variant, "a": a, "c1": c1, "delta": delta, "d0": d0},
        "mode": mode,
        "metric": metric,
        "exclude_self": exclude_self,
        "max_k": max_k,
        "resolve": resolve,
    }
    result = client.request("POST", "/predict", payload)
    click.echo(f"{'k':>6} {'radius':>12} {'statistic':>10} {'threshold':>10}  verdict")
    for row in result["trace"]:
        verdict = "fires: " + ",".join(str(x) for x in row["labels"]) if row["fires"] else "-"
        click.echo(f"{row['k']:>6} {row['radius']:>12.6g} {row['statistic']:>10.4f} "
                   f"{row['threshold']:>10.4f}  {verdict}")
    if result["abstained"]:
        click.echo("outcome: abstain")
    else:
        click.echo(f"outcome: {','.join(result['labels'])} at k={result['chosen_k']} "
                   f"(margin {result['margin']:.4f})")
    if result.get("resolved_label") is not None:
        click.echo(f"resolved label: {result['resolved_label']}")


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("aknn.service.app:app", host=host, port=port)


def entry() -> None:
    try:
        main(standalone_mode=False)
    except CliError as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        # click's own usage problems are configuration errors here
        exc.show()
        sys.exit(1)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)


if __name__ == "__main__":
    entry()
