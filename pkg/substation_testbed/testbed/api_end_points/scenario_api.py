import dataclasses
import traceback
from typing import Any, Dict, Optional

from substation_testbed.config import NS_PER_MS
from substation_testbed.exceptions import IncompleteChainError, TestbedError
from substation_testbed.logger import log_error
from substation_testbed.testbed.attacker.attacker import AttackKind
from substation_testbed.testbed.scenario import runner
from substation_testbed.testbed.scenario.decode import decode
from substation_testbed.testbed.scenario.scenario import list_builtin, load
from substation_testbed.testbed.timing.timing import analyze_window, decompose, read_event_log, timing_json


def _error(message: str, code: str, data: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    response = {"success": False, "status": "error", "message": message, "code": code}
    if data is not None:
        response["data"] = data
    return response


def run_scenario(scenario: str, seed: Optional[int] = None, out_dir: Optional[str] = None, pcap: Optional[bool] = None, report: Optional[bool] = None) -> Dict[str, Any]:
    """
    Load and run a scenario file or built-in scenario.
    Args:
        scenario: path to a scenario JSON file or a built-in scenario name
        seed: overrides the scenario seed
        out_dir: artifacts go to <out_dir>/<scenario name>/, nothing is written when None
        pcap, report: override the scenario output switches when given
    """
    try:
        loaded = load(scenario, seed=seed)
        overrides = {key: value for key, value in (("pcap", pcap), ("report", report)) if value is not None}
        if overrides:
            loaded.output = dataclasses.replace(loaded.output, **overrides)
        result = runner.run(loaded, out_dir=out_dir)
        report = result.report
        passed = result.exit_code == 0
        return {
            "success": True,
            "status": "success",
            "message": "All expectations hold" if passed else "Some expectations failed",
            "code": "SCENARIO_PASSED" if passed else "SCENARIO_FAILED",
            "data": {
                "name": report["name"],
                "exitCode": result.exit_code,
                "tripTimeNs": report["tripTimeNs"],
                "timing": report["timing"],
                "alertCount": report["detection"].get("alertCount", 0),
                "missedAttacks": report["detection"].get("missedAttacks", []),
                "breaker": report["breaker"],
                "captureSha256": report["capture"]["sha256"],
                "expectations": report["expectations"],
                "paths": result.paths,
            },
        }

    except TestbedError as e:
        log_error(title="Run Scenario - Error", message={"scenario": scenario, "error": e.message})
        return _error(e.message, e.code, {"scenario": scenario, "exitCode": 1})
    except Exception as e:
        log_error(
            title="Run Scenario - Error",
            message={"scenario": scenario, "error": str(e), "traceback": traceback.format_exc()},
        )
        return _error(f"Error running scenario: {str(e)}", "INTERNAL_ERROR", {"scenario": scenario, "exitCode": 1})


def list_scenarios() -> Dict[str, Any]:
    try:
        scenarios = list_builtin()
        return {
            "success": True,
            "status": "success",
            "message": f"{len(scenarios)} built-in scenarios",
            "code": "SCENARIOS_LISTED",
            "data": scenarios,
        }
    except Exception as e:
        log_error(title="List Scenarios - Error", message={"error": str(e), "traceback": traceback.format_exc()})
        return _error(f"Error listing scenarios: {str(e)}", "INTERNAL_ERROR")


def decode_frames(source: str) -> Dict[str, Any]:
    """
    Per-frame dump of a pcap, a JSONL capture or whitespace separated hex frames.
    Undecodable frames are listed with their error.
    """
    try:
        frames = decode(source)
        errors = sum(1 for entry in frames if "error" in entry)
        return {
            "success": True,
            "status": "success",
            "message": f"{len(frames)} frames, {errors} undecodable",
            "code": "FRAMES_DECODED",
            "data": {"frames": frames, "count": len(frames), "errors": errors},
        }
    except TestbedError as e:
        log_error(title="Decode Frames - Error", message={"source": source[:200], "error": e.message})
        return _error(e.message, e.code)
    except Exception as e:
        log_error(title="Decode Frames - Error", message={"source": source[:200], "error": str(e), "traceback": traceback.format_exc()})
        return _error(f"Error decoding frames: {str(e)}", "INTERNAL_ERROR")


def analyze_event_log(path: str, attack_kind: Optional[str] = None, detection_latency_ns: Optional[int] = None, mitigation_deploy_ns: int = NS_PER_MS) -> Dict[str, Any]:
    """
    Trip latency decomposition of an events.jsonl, optionally with the
    mitigation window verdict for one attack kind.
    """
    try:
        report = decompose(read_event_log(path))
        windows = []
        if attack_kind is not None:
            windows.append(analyze_window(AttackKind(attack_kind), report, detection_latency_ns, mitigation_deploy_ns))
        return {
            "success": True,
            "status": "success",
            "message": f"T_p = {report.t_p} ns",
            "code": "EVENT_LOG_ANALYZED",
            "data": timing_json(report, windows),
        }
    except IncompleteChainError as e:
        return _error(e.message, e.code, {"missing": e.missing})
    except ValueError:
        return _error(f"Unknown attack kind '{attack_kind}'", "VALIDATION_ERROR")
    except TestbedError as e:
        log_error(title="Analyze Event Log - Error", message={"path": path, "error": e.message})
        return _error(e.message, e.code)
    except Exception as e:
        log_error(title="Analyze Event Log - Error", message={"path": path, "error": str(e), "traceback": traceback.format_exc()})
        return _error(f"Error analyzing event log: {str(e)}", "INTERNAL_ERROR")
