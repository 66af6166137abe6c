"""Small games with known structure, shared by the gnep and acceptance tests."""
import numpy as np

from tdgnep.gnep import ConcaveObjective, GnepInstance, LinearObjective, Player, StrategyProfile
from tdgnep.sets import Box, Polytope


def quadratic_game(grid, centers, coupling, shared=None, bound=1.0, exact=False):
    """``theta_nu = -<<x^nu - c_nu - sum_mu B[nu][mu] x^mu, same>>`` on boxes ``[-bound, bound]``.

    Strictly concave in the own block, so every best response is unique.
    With ``shared = K`` each player also faces ``sum_mu <<1, x^mu>> <= K``.
    ``exact`` attaches the closed-form best response (project the target);
    otherwise best responses go through projected-gradient ascent.
    """
    p = len(centers)
    shape = (grid.intervals, 1)
    lo, hi = np.full(shape, -bound), np.full(shape, bound)
    dt = grid.dt

    def target(x, nu):
        t = np.broadcast_to(np.asarray(centers[nu], float).reshape(-1, 1), shape).copy()
        for mu in range(p):
            if mu != nu:
                t = t + coupling[nu][mu] * x.blocks[mu].values
        return t

    players = []
    for nu in range(p):
        obj = ConcaveObjective(
            value_fn=lambda x, nu=nu: -dt * float(np.sum((x.blocks[nu].values - target(x, nu)) ** 2)),
            gradient_fn=lambda x, nu=nu: -2.0 * (x.blocks[nu].values - target(x, nu)),
            maximizer=(lambda x, fs, nu=nu: fs.project(target(x, nu))) if exact else None,
        )
        if shared is None:
            feas, dep = Box(lo, hi, dt), False
        else:
            def feas(x, nu=nu):
                used = sum(dt * x.blocks[mu].values.sum() for mu in range(p) if mu != nu)
                return Polytope(lo, hi, dt, [(np.ones(shape), shared - used)])
            dep = True
        players.append(Player(f"q{nu}", 1, obj, feas, Box(lo, hi, dt), rival_dependent=dep))
    return GnepInstance(grid, players)


def bilinear_game(grid):
    """Two players on ``[-1, 1]``: ``theta_1 = <<x1, x2 - 0.5>>`` and ``theta_2 = <<x2, 0.3 - x1>>``."""
    shape = (grid.intervals, 1)
    box = Box(-np.ones(shape), np.ones(shape), grid.dt)
    return GnepInstance(grid, [
        Player("row", 1, LinearObjective(lambda x: x.blocks[1].values - 0.5), box, box),
        Player("col", 1, LinearObjective(lambda x: 0.3 - x.blocks[0].values), box, box),
    ])


def decoupled_game(grid, coefs):
    """Linear objectives that ignore the rivals; best responses are constant maps."""
    shape = (grid.intervals, 1)
    box = Box(-np.ones(shape), np.full(shape, 2.0), grid.dt)
    return GnepInstance(grid, [
        Player(f"d{nu}", 1, LinearObjective(lambda x, c=c: np.full(shape, c)), box, box) for nu, c in enumerate(coefs)
    ])


def random_profile(inst, rng):
    """A feasible profile: uniform draw from the ambient boxes, projected onto feasibility."""
    blocks = [rng.uniform(pl.ambient.lower, pl.ambient.upper) for pl in inst.players]
    x, _ = inst.project_profile(StrategyProfile(inst.grid, blocks))
    return x
