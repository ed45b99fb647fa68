"""
PETE - Benchmark Package
"""

from bench.embedding_bench import BenchResult, bench_embedding, format_results, write_bench_csv
