import pytest

from lzcross.presets import get_preset
from lzcross.solver import GridContext, basis_solutions, transfer_matrix


@pytest.fixture(scope="session")
def solved_presets():
    """Basis solutions and transfer matrices shared across test modules.

    Keyed by (preset, h, path); values are dicts with the solutions, the
    shared grid context and the extracted transfer matrix.  Built lazily so
    only the combinations a test asks for are solved.
    """
    cache = {}

    def get(preset: str, h: float, path: str):
        key = (preset, h, path)
        if key not in cache:
            spec = get_preset(preset).make(h=h)
            ctx_key = (preset, h, "ctx")
            if ctx_key not in cache:
                cache[ctx_key] = (spec, GridContext(spec))
            spec, ctx = cache[ctx_key]
            sols = basis_solutions(spec, path=path, ctx=ctx)
            T = transfer_matrix(spec, path=path, solutions=sols)
            cache[key] = {"spec": spec, "ctx": ctx, "solutions": sols, "T": T}
        return cache[key]

    return get
