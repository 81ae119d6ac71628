import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

from substation_testbed import hooks
from substation_testbed.logger import error_print, info_print
from substation_testbed.testbed.api_end_points.scenario_api import run_scenario


def _run_one(args) -> Dict[str, Any]:
    name, seed, out_dir, pcap, report = args
    return run_scenario(name, seed=seed, out_dir=out_dir, pcap=pcap, report=report)


def run_builtin_scenarios(names: Optional[Sequence[str]] = None, jobs: int = 1, seed: Optional[int] = None, out_dir: Optional[str] = None, pcap: Optional[bool] = None, report: Optional[bool] = None) -> Dict[str, Any]:
    """
    Run built-in scenarios, `jobs` at a time.

    Logical Flow:
    1. Resolve the scenario list (all built-ins when none are named)
    2. Run each scenario in its own process; one event loop per process
    3. Collect the per-scenario status dicts in the order the names were given
    """
    start_time = time.time()
    names = list(names or hooks.builtin_scenarios)
    info_print(f"Running {len(names)} scenarios with {jobs} jobs...")

    try:
        work = [(name, seed, out_dir, pcap, report) for name in names]
        if jobs <= 1:
            results: List[Dict[str, Any]] = [_run_one(item) for item in work]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_one, work))

        for name, result in zip(names, results):
            info_print(f"{name}: {result['code']}")

        failed = [name for name, result in zip(names, results) if not result["success"] or result["data"]["exitCode"] != 0]
        total_time = time.time() - start_time
        info_print(f"{len(names) - len(failed)}/{len(names)} scenarios passed in {total_time:.2f} seconds")

        return {
            "status": "success" if not failed else "error",
            "message": "All scenarios passed" if not failed else f"Failed: {', '.join(failed)}",
            "total_time": total_time,
            "results": dict(zip(names, results)),
            "failed": failed,
        }

    except Exception as e:
        total_time = time.time() - start_time
        error_msg = f"Error in batch run: {str(e)}"
        error_print(error_msg)

        return {
            "status": "error",
            "message": error_msg,
            "total_time": total_time,
            "results": {},
            "failed": names,
            "error_details": {
                "exception_type": type(e).__name__,
                "error_message": str(e),
            },
        }
