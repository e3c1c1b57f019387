import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quasisharp.mesh import build_marked_icosphere

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sphere2():
    return build_marked_icosphere(2)


@pytest.fixture(scope="session")
def sphere3():
    return build_marked_icosphere(3)


@pytest.fixture(scope="session")
def sphere4():
    return build_marked_icosphere(4)


def bfs_components(n, edges, members):
    """Plain-Python BFS over the induced subgraph; independent of scipy."""
    members = set(int(v) for v in members)
    nbr = {v: [] for v in members}
    for a, b in edges:
        a, b = int(a), int(b)
        if a in members and b in members:
            nbr[a].append(b)
            nbr[b].append(a)
    seen, comps = set(), []
    for v in sorted(members):
        if v in seen:
            continue
        stack, comp = [v], []
        seen.add(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in nbr[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def triangle_edges_python(triangles):
    """Undirected edge set by direct enumeration."""
    out = set()
    for t in np.asarray(triangles).tolist():
        for i in range(3):
            a, b = t[i], t[(i + 1) % 3]
            out.add((min(a, b), max(a, b)))
    return out
