"""Fixture reals, constraints and seeded random generators for tests and acceptance suites."""
