"""Agent pipeline for solving natural-language optimization problems.

Formulates a structured problem description into a mathematical model via an
LLM backend, generates and executes solver code in a sandbox, auto-tests and
repairs the result, and benchmarks the whole workflow over a fixture corpus.
"""

__version__ = "0.1.0"
