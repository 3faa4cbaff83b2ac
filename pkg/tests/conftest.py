# Keeps the tests directory importable (for the support module) when
# pytest is run from the repository root.
