import os

# Pin BLAS pools before numpy is imported anywhere: keeps timing claims
# honest (single core) and removes a source of run-to-run nondeterminism.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")
