"""The Cleanup and Harvest gridworlds.

Step order: beams resolve, agents move under a per-step random permutation,
apples are picked up, resources regrow, Cleanup waste spawns, time advances.
Every random draw comes from the state's counter-based stream, so a fixed
(config, seed, actions) triple replays bit-identically.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, EnvConfig
from .maps import APPLE, CELL_GLYPHS, EMPTY, RIVER, SPAWN, WALL, WASTE, load_map
from .rates import cleanup_spawn_rate, harvest_regrowth_prob

# Action indices; Harvest uses the first eight (no cleaning beam).
MOVE_UP, MOVE_DOWN, MOVE_LEFT, MOVE_RIGHT, TURN_CW, TURN_CCW, NOOP, FIRE_PUNISH, FIRE_CLEAN = range(9)
CLEANUP_ACTIONS = tuple(range(9))
HARVEST_ACTIONS = tuple(range(8))
ACTION_NAMES = ("move_up", "move_down", "move_left", "move_right",
                "turn_cw", "turn_ccw", "noop", "fire_punish", "fire_clean")

# Orientations, clockwise. Row axis points down.
NORTH, EAST, SOUTH, WEST = range(4)
ORIENT_NAMES = "NESW"
_DIRS = {NORTH: (-1, 0), EAST: (0, 1), SOUTH: (1, 0), WEST: (0, -1)}

# Observation channels
C_EMPTY, C_WALL, C_APPLE, C_RIVER, C_WASTE, C_SELF, C_OTHER, C_BEAM = range(8)
NUM_CHANNELS = 8

PUNISH_HIT_REWARD = -50.0
PUNISH_FIRE_COST = -1.0
APPLE_REWARD = 1.0

_WALKABLE = (EMPTY, APPLE, SPAWN)


@dataclass
class StepOutcome:
    extrinsic: np.ndarray
    events: list = field(default_factory=list)


@dataclass
class EnvState:
    grid: np.ndarray                # (H, W) cell codes
    positions: np.ndarray           # (N, 2) row, col
    orientations: np.ndarray        # (N,)
    alive: np.ndarray               # (N,) bool
    rng: np.random.Generator
    t: int = 0
    beam_cells: set = field(default_factory=set)   # cells covered by beams last step

    def clone(self):
        return copy.deepcopy(self)


def _rotate_cw(d):
    return (d[1], -d[0])


def _rotate_ccw(d):
    return (-d[1], d[0])


class SSDEnv:
    """One environment instance; confine to a single worker at a time."""

    def __init__(self, config: EnvConfig):
        self.config = config
        self.parsed = load_map(config.map_rows if config.map_rows else config.map,
                               config.kind)
        if len(self.parsed.spawns) < config.num_agents:
            raise ConfigError(
                f"map has {len(self.parsed.spawns)} spawn points for "
                f"{config.num_agents} agents")
        self.height = self.parsed.height
        self.width = self.parsed.width
        self.actions = CLEANUP_ACTIONS if config.kind == "cleanup" else HARVEST_ACTIONS
        self.num_actions = len(self.actions)
        self._orchard = sorted(self.parsed.orchard)
        self._river = sorted(self.parsed.river)
        self.state = None

    # -- lifecycle -----------------------------------------------------------

    def reset(self, seed=None):
        cfg = self.config
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(cfg.seed if seed is None else seed)))
        grid = np.array(self.parsed.cells, dtype=np.uint8)

        if cfg.kind == "cleanup" and self._river:
            forced = list(self.parsed.forced_waste)
            want = int(round(cfg.initial_waste_fraction * len(self._river)))
            pool = [cell for cell in self._river if cell not in forced]
            extra = max(0, want - len(forced))
            if extra > 0:
                idx = rng.choice(len(pool), size=min(extra, len(pool)), replace=False)
                forced += [pool[i] for i in sorted(idx)]
            for (r, c) in forced:
                grid[r, c] = WASTE

        spawn_idx = rng.choice(len(self.parsed.spawns), size=cfg.num_agents, replace=False)
        positions = np.array([self.parsed.spawns[i] for i in spawn_idx], dtype=np.int64)
        orientations = rng.integers(0, 4, size=cfg.num_agents)
        self.state = EnvState(grid=grid, positions=positions, orientations=orientations,
                              alive=np.ones(cfg.num_agents, dtype=bool), rng=rng)
        return self.state

    # -- dynamics ------------------------------------------------------------

    def waste_density(self):
        if not self._river:
            return 0.0
        return float(np.sum(self.state.grid == WASTE)) / len(self._river)

    def _beam_footprint(self, pos, orient):
        """Cells covered by a beam from the agent's facing cell: length cells
        forward, width cells across, each forward ray blocked by walls."""
        cfg = self.config
        fwd = _DIRS[orient]
        side = _rotate_cw(fwd)
        half = cfg.beam_width // 2
        cells = []
        for lateral in range(-half, half + 1):
            start = (pos[0] + lateral * side[0], pos[1] + lateral * side[1])
            for dist in range(1, cfg.beam_length + 1):
                r = start[0] + dist * fwd[0]
                c = start[1] + dist * fwd[1]
                if not (0 <= r < self.height and 0 <= c < self.width):
                    break
                if self.state.grid[r, c] == WALL:
                    break
                cells.append((r, c))
        return cells

    def step(self, actions):
        st = self.state
        cfg = self.config
        if st is None:
            raise RuntimeError("step before reset")
        if st.t >= cfg.episode_length:
            raise RuntimeError(f"episode already finished at t={st.t}")
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (cfg.num_agents,):
            raise ValueError(f"expected {cfg.num_agents} actions, got shape {actions.shape}")
        if np.any(actions < 0) or np.any(actions >= self.num_actions):
            raise ValueError(f"action index out of range for {cfg.kind} "
                             f"({self.num_actions} actions)")

        rewards = np.zeros(cfg.num_agents)
        events = []
        st.beam_cells = set()

        # Phase 1: beams, simultaneous from current poses.
        for k in range(cfg.num_agents):
            a = actions[k]
            if a == FIRE_PUNISH:
                rewards[k] += PUNISH_FIRE_COST
                cells = self._beam_footprint(st.positions[k], st.orientations[k])
                st.beam_cells.update(cells)
                events.append({"kind": "beam_fired", "agent": k, "beam": "punish"})
                cellset = set(cells)
                for j in range(cfg.num_agents):
                    if j != k and tuple(st.positions[j]) in cellset:
                        rewards[j] += PUNISH_HIT_REWARD
                        events.append({"kind": "agent_hit", "agent": j, "by": k})
            elif a == FIRE_CLEAN:
                cells = self._beam_footprint(st.positions[k], st.orientations[k])
                st.beam_cells.update(cells)
                events.append({"kind": "beam_fired", "agent": k, "beam": "clean"})
                for (r, c) in cells:
                    if st.grid[r, c] == WASTE:
                        st.grid[r, c] = RIVER
                        events.append({"kind": "waste_cleaned", "agent": k,
                                       "cell": (r, c)})

        # Phase 2: movement in a per-step random permutation; a move into an
        # occupied or just-claimed cell becomes a noop.
        order = st.rng.permutation(cfg.num_agents)
        occupied = {tuple(p) for p in st.positions}
        for k in order:
            a = actions[k]
            if a == TURN_CW:
                st.orientations[k] = (st.orientations[k] + 1) % 4
                continue
            if a == TURN_CCW:
                st.orientations[k] = (st.orientations[k] - 1) % 4
                continue
            if a not in (MOVE_UP, MOVE_DOWN, MOVE_LEFT, MOVE_RIGHT):
                continue
            fwd = _DIRS[st.orientations[k]]
            delta = {MOVE_UP: fwd, MOVE_DOWN: (-fwd[0], -fwd[1]),
                     MOVE_LEFT: _rotate_ccw(fwd), MOVE_RIGHT: _rotate_cw(fwd)}[a]
            tgt = (st.positions[k][0] + delta[0], st.positions[k][1] + delta[1])
            if not (0 <= tgt[0] < self.height and 0 <= tgt[1] < self.width):
                continue
            if st.grid[tgt] not in _WALKABLE or tgt in occupied:
                continue
            occupied.discard(tuple(st.positions[k]))
            occupied.add(tgt)
            st.positions[k] = tgt

        # Phase 3: apple pickup.
        for k in range(cfg.num_agents):
            pos = tuple(st.positions[k])
            if st.grid[pos] == APPLE:
                st.grid[pos] = EMPTY
                rewards[k] += APPLE_REWARD
                events.append({"kind": "apple_collected", "agent": k, "cell": pos})

        # Phase 4: regrowth on unoccupied empty orchard cells.
        occupied = {tuple(p) for p in st.positions}
        if cfg.kind == "cleanup":
            rate = cleanup_spawn_rate(self.waste_density(),
                                      cfg.cleanup_depletion_threshold,
                                      cfg.cleanup_max_spawn_rate)
            candidates = [cell for cell in self._orchard
                          if st.grid[cell] == EMPTY and cell not in occupied]
            if candidates:
                draws = st.rng.random(len(candidates))
                for cell, u in zip(candidates, draws):
                    if u < rate:
                        st.grid[cell] = APPLE
        else:
            snapshot = st.grid == APPLE
            candidates = [cell for cell in self._orchard
                          if st.grid[cell] == EMPTY and cell not in occupied]
            if candidates:
                draws = st.rng.random(len(candidates))
                for cell, u in zip(candidates, draws):
                    prob = harvest_regrowth_prob(
                        self._nearby_apples(snapshot, cell),
                        cfg.harvest_low_rate, cfg.harvest_mid_rate, cfg.harvest_high_rate)
                    if u < prob:
                        st.grid[cell] = APPLE

        # Phase 5: Cleanup waste spawning, one cell per step below saturation.
        if cfg.kind == "cleanup" and self._river:
            clean = [cell for cell in self._river if st.grid[cell] == RIVER]
            if clean and st.rng.random() < cfg.waste_spawn_prob:
                cell = clean[int(st.rng.integers(len(clean)))]
                st.grid[cell] = WASTE

        st.t += 1
        return st, StepOutcome(extrinsic=rewards, events=events)

    @staticmethod
    def _nearby_apples(apple_mask, cell):
        r0, c0 = cell
        count = 0
        H, W = apple_mask.shape
        for dr in range(-2, 3):
            for dc in range(-2, 3):
                if dr == 0 and dc == 0 or abs(dr) + abs(dc) > 2:
                    continue
                r, c = r0 + dr, c0 + dc
                if 0 <= r < H and 0 <= c < W and apple_mask[r, c]:
                    count += 1
        return count

    @property
    def done(self):
        return self.state is not None and self.state.t >= self.config.episode_length

    # -- observation ---------------------------------------------------------

    def observe(self, k):
        """Egocentric one-hot window for agent k, rotated to face up.
        Out-of-map cells read as wall."""
        st = self.state
        V = self.config.view_size
        R = V // 2
        padded = np.full((self.height + 2 * R, self.width + 2 * R), WALL, dtype=np.uint8)
        padded[R:R + self.height, R:R + self.width] = st.grid
        r, c = st.positions[k]
        window = padded[r:r + V, c:c + V]

        obs = np.zeros((V, V, NUM_CHANNELS))
        obs[:, :, C_EMPTY] = (window == EMPTY) | (window == SPAWN)
        obs[:, :, C_WALL] = window == WALL
        obs[:, :, C_APPLE] = window == APPLE
        obs[:, :, C_RIVER] = window == RIVER
        obs[:, :, C_WASTE] = window == WASTE
        obs[R, R, C_SELF] = 1.0
        for j in range(self.config.num_agents):
            if j == k:
                continue
            dr = st.positions[j][0] - r
            dc = st.positions[j][1] - c
            if abs(dr) <= R and abs(dc) <= R:
                obs[R + dr, R + dc, C_OTHER] = 1.0
        for (br, bc) in st.beam_cells:
            dr, dc = br - r, bc - c
            if abs(dr) <= R and abs(dc) <= R:
                obs[R + dr, R + dc, C_BEAM] = 1.0

        return np.rot90(obs, k=int(st.orientations[k]), axes=(0, 1)).copy()

    # -- rendering -----------------------------------------------------------

    def render_ascii(self):
        return render_ascii(self.state)


def render_ascii(state: EnvState):
    """Grid glyphs with agents as digits; per-agent status lines carry
    orientation and the cell glyph hidden under each agent."""
    lines = [[CELL_GLYPHS[c] for c in row] for row in state.grid]
    under = []
    for k, (r, c) in enumerate(state.positions):
        under.append(CELL_GLYPHS[state.grid[r, c]])
        lines[r][c] = str(k % 10)
    out = ["".join(row).replace(" ", ".") for row in lines]
    for k, (r, c) in enumerate(state.positions):
        out.append(f"agent {k}: row={r} col={c} facing={ORIENT_NAMES[state.orientations[k]]} "
                   f"under={under[k].replace(' ', '.')}")
    out.append(f"step {state.t}")
    return "\n".join(out) + "\n"


_GLYPH_TO_CODE = {v: k for k, v in CELL_GLYPHS.items()}
_GLYPH_TO_CODE["."] = EMPTY


def parse_render(text):
    """Inverse of render_ascii: returns (grid, positions, orientations, t)."""
    grid_rows, agents, t = [], [], 0
    for line in text.splitlines():
        if line.startswith("agent "):
            head, fields = line.split(":", 1)
            k = int(head.split()[1])
            kv = dict(f.split("=") for f in fields.split())
            agents.append((k, int(kv["row"]), int(kv["col"]),
                           ORIENT_NAMES.index(kv["facing"]), kv["under"]))
        elif line.startswith("step "):
            t = int(line.split()[1])
        elif line:
            grid_rows.append(line)
    grid = np.zeros((len(grid_rows), len(grid_rows[0])), dtype=np.uint8)
    for r, row in enumerate(grid_rows):
        for c, ch in enumerate(row):
            grid[r, c] = _GLYPH_TO_CODE.get(ch, EMPTY) if not ch.isdigit() else EMPTY
    positions = np.zeros((len(agents), 2), dtype=np.int64)
    orientations = np.zeros(len(agents), dtype=np.int64)
    for (k, r, c, o, under) in agents:
        grid[r, c] = _GLYPH_TO_CODE[under]
        positions[k] = (r, c)
        orientations[k] = o
    return grid, positions, orientations, t
