"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [repeat]
"""
import sys

from rmglab.bench import run_benchmarks

if __name__ == "__main__":
    for line in run_benchmarks(int(sys.argv[1]) if len(sys.argv) > 1 else 5):
        print(line)
