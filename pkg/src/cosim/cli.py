"""Command-line front door.

`cosim run` executes a scenario file in-process and, when asked, serves
the HTTP control endpoint for the duration of the run.  `inject`,
`status` and `watch` are thin HTTP clients against that endpoint, so a
running simulation can be operated from other terminals or machines.

Exit codes for `run`: 0 clean, 2 same-time-loop limit, 3 protocol error,
1 usage/scenario errors.  Set COSIM_LOG=debug|info for diagnostics on
stderr.
"""

from __future__ import annotations

import json
import logging
import os
import sys
import threading
import time

import click
import httpx

from .errors import ScenarioError
from .scenariofile import parse_scenario_file
from .service import RunController, create_app
from .service.control import EXIT_USAGE

log = logging.getLogger("cosim.cli")


def _setup_logging() -> None:
    level_name = os.environ.get("COSIM_LOG", "").lower()
    if level_name in ("debug", "info"):
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG if level_name == "debug" else logging.INFO,
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
        )


@click.group()
def main() -> None:
    """Deterministic hybrid co-simulation engine."""
    _setup_logging()


@main.command()
@click.argument("scenario", type=click.Path(exists=False))
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="write the trace as JSONL")
@click.option("--rt", "rt_factor", type=float, default=None, help="soft real-time pacing factor")
@click.option("--until", "until", type=int, default=None, help="override scenario end tick")
@click.option("--control-port", type=int, default=None, help="serve the HTTP control endpoint")
@click.option("--listen-port", type=int, default=None, help="TCP port for remote simulators")
@click.option("--console-dir", type=click.Path(), default=None, help="static dir served at /console")
def run(scenario, trace_path, rt_factor, until, control_port, listen_port, console_dir):
    """Run a scenario file to completion."""
    try:
        doc = parse_scenario_file(scenario)
        controller = RunController(
            doc,
            trace_path=trace_path,
            rt_factor_override=rt_factor,
            until_override=until,
            listen_port=listen_port,
        )
    except (ScenarioError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)

    server = None
    if control_port is not None:
        import uvicorn

        app = create_app(controller, console_dir=console_dir or os.environ.get("COSIM_CONSOLE_DIR"))
        config = uvicorn.Config(app, host="127.0.0.1", port=control_port, log_level="warning")
        server = uvicorn.Server(config)
        threading.Thread(target=server.run, daemon=True).start()

    try:
        code = controller.run_blocking()
    except ScenarioError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if server is not None:
        time.sleep(1.0)  # let streaming clients observe end-of-trace
        server.should_exit = True
    if code != 0 and controller.status.snapshot().get("error"):
        click.echo(f"error: {controller.status.snapshot()['error']}", err=True)
    sys.exit(code)


@main.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.argument("sid")
@click.argument("time", type=int)
def inject(url, sid, time):
    """Inject an external event into a soft real-time run."""
    response = httpx.post(f"{url}/events", json={"sid": sid, "time": time}, timeout=10.0)
    click.echo(json.dumps(response.json(), indent=2))
    sys.exit(0 if response.status_code == 202 else 1)


@main.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def status(url):
    """Print the status of a running scenario."""
    response = httpx.get(f"{url}/status", timeout=10.0)
    click.echo(json.dumps(response.json(), indent=2))
    sys.exit(0 if response.status_code == 200 else 1)


@main.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--after", type=int, default=0, help="resume after this seq")
def watch(url, after):
    """Stream trace records from a running scenario to stdout."""
    with httpx.stream("GET", f"{url}/trace", params={"after": after}, timeout=None) as response:
        ended = False
        for line in response.iter_lines():
            if line.startswith("event: end"):
                ended = True
            elif line.startswith("data: ") and not ended:
                click.echo(line[len("data: "):])
            if ended and line == "":
                return


@main.command()
@click.argument("builtin")
@click.argument("sid")
@click.argument("host")
@click.argument("port", type=int)
def simhost(builtin, sid, host, port):
    """Host a builtin simulator as a wire-protocol client process."""
    from .simhost import serve

    sys.exit(serve(builtin, sid, host, port))


if __name__ == "__main__":
    main()
