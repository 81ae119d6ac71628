app_name = "substation_testbed"
app_title = "Substation Testbed"
app_publisher = "Hopnet Communications LLP"
app_description = "Deterministic SV/GOOSE process bus testbed with attacks, NIDS and trip timing analysis"
app_email = "info@hopnet.co.in"
app_license = "mit"

# Built-in scenarios: name -> fixture file under substation_testbed/fixtures
builtin_scenarios = {
    "s1_fault_trip": "s1_fault_trip.json",
    "s2_fault_trip_simulated_ied": "s2_fault_trip_simulated_ied.json",
    "s3_fault_trip_breaker_ied": "s3_fault_trip_breaker_ied.json",
    "s4_sv_fdi": "s4_sv_fdi.json",
    "s5_goose_replay": "s5_goose_replay.json",
    "s6_goose_spoof": "s6_goose_spoof.json",
}

# Artifacts of `testbed run` land in <output_dir>/<scenario name>/
default_output_dir = "testbed_output"
report_file = "report.json"
events_file = "events.jsonl"
capture_file = {
    "pcap": "capture.pcap",
    "jsonl": "capture.jsonl",
}

batch_jobs = {
    "run_builtin_scenarios": "substation_testbed.batch_functions.run_builtin_scenarios.run_builtin_scenarios",
}
