from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, args_list, jobs: int = 1) -> list:
    """``[fn(*args) for args in args_list]``, optionally across processes, in input order."""
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *a) for a in args_list]
        return [f.result() for f in futures]
