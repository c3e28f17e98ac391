from .suites import SUITES, run_suite  # noqa: F401
