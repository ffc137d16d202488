import hypothesis

# Solver-backed properties can exceed hypothesis' default 200 ms deadline on
# slow machines; determinism matters more here than wall-time policing.
hypothesis.settings.register_profile(
    "qfront", deadline=None, derandomize=True, max_examples=50
)
hypothesis.settings.load_profile("qfront")
