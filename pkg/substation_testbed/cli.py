"""
`testbed` command line, a thin layer over the api endpoints.
Every command exits 0 on success; `run` exits with the scenario exit code.
"""

import json
from typing import Any, Dict, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from substation_testbed import hooks
from substation_testbed.batch_functions.run_builtin_scenarios import run_builtin_scenarios
from substation_testbed.config import NS_PER_MS
from substation_testbed.logger import setup_logging
from substation_testbed.testbed.api_end_points.attack_api import attack_fdi, attack_learn, attack_replay, attack_spoof
from substation_testbed.testbed.api_end_points.scenario_api import analyze_event_log, decode_frames, list_scenarios, run_scenario
from substation_testbed.testbed.scenario.decode import render_line

app = typer.Typer(
    name="testbed",
    help="IEC 61850 process bus cyber-physical testbed",
    add_completion=False,
)
attack_app = typer.Typer(help="Craft attack frames offline from a recorded capture")
app.add_typer(attack_app, name="attack")

console = Console()


def _fail(response: Dict[str, Any], exit_code: int = 1):
    console.print(f"[red]{response['code']}[/red]: {response['message']}")
    raise typer.Exit(exit_code)


def _print_run(data: Dict[str, Any]):
    timing = data["timing"]
    table = Table(title=f"Scenario {data['name']}", show_header=True, header_style="bold")
    table.add_column("Metric")
    table.add_column("Value", justify="right")
    trip = data["tripTimeNs"]
    table.add_row("Trip time", "-" if trip is None else f"{trip / NS_PER_MS:.3f} ms")
    if "incomplete" in timing:
        table.add_row("Trip chain", f"incomplete ({timing['incomplete']})")
    else:
        for key in ("T_a_ns", "T_b_ns", "T_c_ns", "T_p_ns"):
            table.add_row(key[:3], f"{timing[key] / NS_PER_MS:.3f} ms")
        for window in timing.get("windows", []):
            table.add_row(f"Window {window['attackKind']}", "blocked" if window["blocked"] else "not blocked")
    table.add_row("Breaker", "closed" if data["breaker"]["closed"] else "open")
    table.add_row("Alerts", str(data["alertCount"]))
    table.add_row("Missed attacks", ", ".join(data["missedAttacks"]) or "-")
    table.add_row("Capture SHA-256", data["captureSha256"][:16])
    console.print(table)
    for check in data["expectations"]:
        if not check["passed"]:
            console.print(f"[red]expectation {check['name']}[/red]: expected {check['expected']}, got {check['actual']}")


@app.command()
def run(
    scenario: Optional[str] = typer.Option(None, "--scenario", "-s", help="Scenario JSON file or built-in scenario name"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the scenario seed"),
    out: str = typer.Option(hooks.default_output_dir, "--out", "-o", help="Output directory"),
    pcap: Optional[bool] = typer.Option(None, "--pcap/--no-pcap", help="Write the capture (default: scenario setting)"),
    report: Optional[bool] = typer.Option(None, "--report/--no-report", help="Write report.json (default: scenario setting)"),
    run_all: bool = typer.Option(False, "--all", help="Run every built-in scenario"),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Parallel scenarios with --all"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug output"),
):
    """
    Run a scenario and write report.json, events.jsonl and the capture.
    """
    setup_logging(verbose)
    if run_all == (scenario is not None):
        console.print("[red]Pass exactly one of --scenario or --all[/red]")
        raise typer.Exit(2)

    if run_all:
        result = run_builtin_scenarios(jobs=jobs, seed=seed, out_dir=out, pcap=pcap, report=report)
        table = Table(title="Built-in scenarios", show_header=True, header_style="bold")
        table.add_column("Scenario")
        table.add_column("Result")
        table.add_column("Trip time", justify="right")
        for name, response in result["results"].items():
            trip = response.get("data", {}).get("tripTimeNs")
            table.add_row(name, response["code"], "-" if trip is None else f"{trip / NS_PER_MS:.3f} ms")
        console.print(table)
        console.print(result["message"])
        raise typer.Exit(0 if result["status"] == "success" else 1)

    response = run_scenario(scenario, seed=seed, out_dir=out, pcap=pcap, report=report)
    if not response["success"]:
        _fail(response, response.get("data", {}).get("exitCode", 1))
    _print_run(response["data"])
    for kind, path in response["data"]["paths"].items():
        console.print(f"[dim]{kind}: {path}[/dim]")
    raise typer.Exit(response["data"]["exitCode"])


@app.command("list")
def list_cmd():
    """
    List the built-in scenarios.
    """
    response = list_scenarios()
    if not response["success"]:
        _fail(response)
    table = Table(title="Built-in scenarios", show_header=True, header_style="bold")
    table.add_column("Name")
    table.add_column("Description")
    for entry in response["data"]:
        table.add_row(entry["name"], entry["description"])
    console.print(table)


@app.command()
def decode(
    source: str = typer.Argument(..., help="pcap file, capture.jsonl, or hex frames"),
    as_json: bool = typer.Option(False, "--json", help="Print the decoded fields as JSON"),
):
    """
    Per-frame dump of a capture.
    """
    response = decode_frames(source)
    if not response["success"]:
        _fail(response)
    if as_json:
        console.print_json(json.dumps(response["data"]["frames"]))
    else:
        for entry in response["data"]["frames"]:
            console.print(render_line(entry), markup=False, highlight=False, soft_wrap=True)
    console.print(f"[dim]{response['message']}[/dim]")


@app.command()
def analyze(
    log: str = typer.Argument(..., help="events.jsonl of a run"),
    attack_kind: Optional[str] = typer.Option(None, "--attack-kind", help="sv_fdi, goose_replay or goose_spoof"),
    detection_latency_ns: Optional[int] = typer.Option(None, "--detection-latency-ns", help="NIDS detection latency"),
    mitigation_deploy_ns: int = typer.Option(NS_PER_MS, "--mitigation-deploy-ns", help="Time to deploy a mitigation"),
):
    """
    Decompose the trip latency T_p = T_a + T_b + T_c of an event log.
    """
    response = analyze_event_log(log, attack_kind, detection_latency_ns, mitigation_deploy_ns)
    if not response["success"]:
        _fail(response)
    console.print_json(json.dumps(response["data"]))


def _print_data(response: Dict[str, Any]):
    if not response["success"]:
        _fail(response)
    console.print(response["message"])
    console.print_json(json.dumps(response["data"]))


def _parse_all_data(text: str) -> List[bool]:
    values = {"true": True, "1": True, "false": False, "0": False}
    entries = [entry.strip().lower() for entry in text.split(",")]
    if not all(entry in values for entry in entries):
        raise typer.BadParameter(f"expected true/false entries, got '{text}'", param_hint="--all-data")
    return [values[entry] for entry in entries]


@attack_app.command("learn")
def learn_cmd(pcap: str = typer.Argument(..., help="Recorded capture")):
    """Learn stream addressing and counters from a capture."""
    _print_data(attack_learn(pcap))


@attack_app.command("replay")
def replay_cmd(
    pcap: str = typer.Argument(..., help="Recorded capture"),
    index: int = typer.Option(..., "--index", help="Packet index of the GOOSE frame to replay"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Output file (.pcap or hex lines)"),
):
    """Pick a captured GOOSE frame for replay, unchanged."""
    _print_data(attack_replay(pcap, index, out))


@attack_app.command("spoof")
def spoof_cmd(
    pcap: str = typer.Argument(..., help="Recorded capture"),
    target: str = typer.Option(..., "--target", help="goId of the stream to spoof"),
    all_data: str = typer.Option("true", "--all-data", help="Comma separated allData entries, e.g. true,false"),
    conformant: bool = typer.Option(True, "--conformant/--naive", help="Continue the learned stNum/sqNum"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Output file (.pcap or hex lines)"),
):
    """Craft one GOOSE frame for a learned stream."""
    _print_data(attack_spoof(pcap, target, _parse_all_data(all_data), conformant, out))


@attack_app.command("fdi")
def fdi_cmd(
    pcap: str = typer.Argument(..., help="Recorded capture"),
    target: str = typer.Option(..., "--target", help="svId of the stream to inject into"),
    injected_peak_a: float = typer.Option(20_000.0, "--injected-peak-a", help="Peak of the injected phase currents"),
    duration_ns: int = typer.Option(20 * NS_PER_MS, "--duration-ns", help="Injection duration"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Output file (.pcap or hex lines)"),
):
    """Craft an SV false data injection run."""
    _print_data(attack_fdi(pcap, target, injected_peak_a, duration_ns, out))


if __name__ == "__main__":
    app()
