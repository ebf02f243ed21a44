"""Terminal reporting for the acceptance suite: one PASS/FAIL line per
criterion, printed after the run."""

_CRITERIA = [
    ("test_event_distribution_reference_ratio", "event-distribution percentages"),
    ("test_turn_statistics_match_hand_enumeration", "turn-taking statistics vs interval enumeration + per-frame scan"),
    ("test_graph_matches_pair_counting", "graph adjacency vs pair-counting oracle"),
    ("test_gradients_match_finite_differences", "analytic gradients vs central differences"),
    ("test_streaming_is_strictly_causal", "bitwise causality under future perturbation"),
    ("test_toy_fixture_is_learnable", "toy learnability + weighted minority recall"),
    ("test_metric_oracles_agree", "text/classification metrics vs independent oracles"),
    ("test_stitched_audio_survives_reanalysis", "stitcher round trip through event analysis"),
    ("test_speaking_style_arithmetic", "WPM/FWR arithmetic + reference row"),
    ("test_ablation_grid_shape", "ablation grid shape and context monotonicity"),
]

_outcomes = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    _outcomes[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, (name, title) in enumerate(_CRITERIA, 1):
        if name in _outcomes:
            verdict = "PASS" if _outcomes[name] == "passed" else "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {title}")
