"""Deterministic benchmark environments with vector-valued rewards.

Two families:

* A deep-sea treasure hunt on a small grid. A submarine starts at the
  surface, each column of the seabed holds one treasure, and deeper
  treasures are worth more. Objective 1 is treasure value (granted on
  pickup), objective 2 is a -1 time penalty per move, so short cheap
  dives and long valuable ones trade off against each other.

* An underpowered mountain car with three objectives: elapsed frames,
  backward throttle applications, and forward throttle applications
  are penalized separately.

Everything is deterministic; the only state is the dataclasses below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Deep-sea treasure actions.
UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
DST_ACTION_NAMES = ("up", "down", "left", "right")
_DST_MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

# Mountain-car actions. Null is deliberately action 0: greedy ties on
# an untouched Q head then resolve to coasting rather than to throttle.
NULL, BACKWARD, FORWARD = 0, 1, 2
MC_ACTION_NAMES = ("null", "backward", "forward")
_MC_THROTTLE = {NULL: 0.0, BACKWARD: -1.0, FORWARD: 1.0}

MC_POSITION_MIN = -1.2
MC_POSITION_MAX = 0.6
MC_VELOCITY_MAX = 0.07
MC_GOAL_POSITION = 0.5
MC_START_POSITION = -0.5
# Strong enough that reversing up the back slope first lets the car
# escape inside the frame cap, yet too weak to drive straight out:
# full forward throttle from the start stalls below the goal.
MC_ENGINE_FORCE = 0.0015
MC_GRAVITY = 0.0025
MC_FRAME_CAP = 100

_GRAY_FLOOR = 0.0
_GRAY_WATER = 0.35
_GRAY_TREASURE = 0.7
_GRAY_AGENT = 1.0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a treasure grid: ``treasure_cells`` is a tuple of
    (row, col, value) triples, one per column; cells below a column's
    treasure are solid floor."""

    rows: int
    cols: int
    treasure_cells: tuple[tuple[int, int, float], ...]
    max_episode_frames: int = 100

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 1:
            raise ValueError(f"grid too small: {self.rows}x{self.cols}")
        if self.max_episode_frames < 1:
            raise ValueError("max_episode_frames must be positive")
        if len(self.treasure_cells) != self.cols:
            raise ValueError("need exactly one treasure per column")
        seen_cols = set()
        prev_row, prev_val = -1, -math.inf
        for row, col, value in self.treasure_cells:
            if not (0 <= row < self.rows and 0 <= col < self.cols):
                raise ValueError(f"treasure ({row}, {col}) out of bounds")
            if col in seen_cols:
                raise ValueError(f"two treasures in column {col}")
            seen_cols.add(col)
        for (row, col, value), (nrow, ncol, nvalue) in zip(
            self.treasure_cells, self.treasure_cells[1:]
        ):
            if not (ncol > col and nrow > row and nvalue > value):
                raise ValueError(
                    "treasures must get deeper and more valuable left to right"
                )

    def floor_row(self, col: int) -> int:
        """Deepest accessible row in ``col`` (the treasure row)."""
        for row, c, _ in self.treasure_cells:
            if c == col:
                return row
        raise ValueError(f"column {col} out of range")

    def treasure_value(self, row: int, col: int) -> float | None:
        for trow, tcol, value in self.treasure_cells:
            if (trow, tcol) == (row, col):
                return value
        return None

    def accessible(self, row: int, col: int) -> bool:
        return (
            0 <= col < self.cols
            and 0 <= row < self.rows
            and row <= self.floor_row(col)
        )


def dst_layout(width: int, max_episode_frames: int = 100) -> GridSpec:
    """Canonical treasure grids. Width 3 is the small benchmark, width
    5 the harder one with five treasures."""
    if width == 3:
        cells = ((3, 0, 1.0), (4, 1, 26.25), (5, 2, 100.0))
        return GridSpec(6, 3, cells, max_episode_frames)
    if width == 5:
        cells = ((3, 0, 1.0), (4, 1, 5.0), (5, 2, 17.0), (7, 3, 49.0), (9, 4, 100.0))
        return GridSpec(10, 5, cells, max_episode_frames)
    raise ValueError(f"no canonical layout of width {width}")


@dataclass(frozen=True)
class DstState:
    row: int
    col: int
    frames: int = 0


@dataclass(frozen=True)
class MountainCarState:
    position: float
    velocity: float
    frames: int = 0


@dataclass(frozen=True)
class RawStep:
    """One transition of the underlying dynamics."""

    next_state: DstState | MountainCarState
    reward: np.ndarray
    terminal: bool
    truncated: bool


def dst_reset(grid: GridSpec) -> DstState:
    return DstState(0, 0, 0)


def dst_finished(grid: GridSpec, state: DstState) -> bool:
    at_treasure = grid.treasure_value(state.row, state.col) is not None
    return at_treasure or state.frames >= grid.max_episode_frames


def dst_step(grid: GridSpec, state: DstState, action: int) -> RawStep:
    """Move the submarine one cell; bumping a wall or the seabed leaves
    it in place. Time costs -1 either way."""
    if action not in _DST_MOVES:
        raise ValueError(f"unknown action {action}")
    if dst_finished(grid, state):
        raise RuntimeError("episode already finished")
    drow, dcol = _DST_MOVES[action]
    row, col = state.row + drow, state.col + dcol
    if not grid.accessible(row, col):
        row, col = state.row, state.col
    nxt = DstState(row, col, state.frames + 1)
    value = grid.treasure_value(row, col)
    reward = np.array([value if value is not None else 0.0, -1.0])
    terminal = value is not None
    truncated = not terminal and nxt.frames >= grid.max_episode_frames
    return RawStep(nxt, reward, terminal, truncated)


def mc_reset() -> MountainCarState:
    return MountainCarState(MC_START_POSITION, 0.0, 0)


def mc_finished(state: MountainCarState, frame_cap: int = MC_FRAME_CAP) -> bool:
    return state.position >= MC_GOAL_POSITION or state.frames >= frame_cap


def _mc_frame(position: float, velocity: float, throttle: float) -> tuple[float, float]:
    velocity += MC_ENGINE_FORCE * throttle - MC_GRAVITY * math.cos(3.0 * position)
    velocity = max(-MC_VELOCITY_MAX, min(MC_VELOCITY_MAX, velocity))
    position += velocity
    if position < MC_POSITION_MIN:
        position, velocity = MC_POSITION_MIN, 0.0
    elif position > MC_POSITION_MAX:
        position = MC_POSITION_MAX
    return position, velocity


def mc_step(
    state: MountainCarState, action: int, repeat: int = 1, frame_cap: int = MC_FRAME_CAP
) -> RawStep:
    """Hold ``action`` for up to ``repeat`` physics frames (fewer if the
    goal or the frame cap interrupts). Objective 1 pays -1 per elapsed
    frame; objectives 2 and 3 pay -1 once per backward/forward decision."""
    if action not in _MC_THROTTLE:
        raise ValueError(f"unknown action {action}")
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    if mc_finished(state, frame_cap):
        raise RuntimeError("episode already finished")
    throttle = _MC_THROTTLE[action]
    position, velocity, frames = state.position, state.velocity, state.frames
    used = 0
    for _ in range(repeat):
        position, velocity = _mc_frame(position, velocity, throttle)
        frames += 1
        used += 1
        if position >= MC_GOAL_POSITION or frames >= frame_cap:
            break
    nxt = MountainCarState(position, velocity, frames)
    reward = np.array(
        [
            -float(used),
            -1.0 if action == BACKWARD else 0.0,
            -1.0 if action == FORWARD else 0.0,
        ]
    )
    terminal = position >= MC_GOAL_POSITION
    truncated = not terminal and frames >= MC_FRAME_CAP
    return RawStep(nxt, reward, terminal, truncated)


@dataclass(frozen=True)
class StateEncoding:
    """How raw states become network inputs. ``one_hot`` flattens grid
    coordinates, ``vector`` rescales (position, velocity) to roughly
    [-1, 1], ``image`` renders a grayscale frame."""

    mode: str = "one_hot"
    image_height: int = 84
    image_width: int = 84

    def __post_init__(self) -> None:
        if self.mode not in ("one_hot", "vector", "image"):
            raise ValueError(f"unknown encoding mode {self.mode!r}")
        if self.mode == "image" and (self.image_height < 8 or self.image_width < 8):
            raise ValueError("image dimensions too small to draw anything")


def encode_dst(grid: GridSpec, state: DstState, encoding: StateEncoding) -> np.ndarray:
    if encoding.mode == "one_hot":
        out = np.zeros(grid.rows * grid.cols)
        out[state.row * grid.cols + state.col] = 1.0
        return out
    if encoding.mode == "image":
        return render_dst(grid, state, encoding.image_height, encoding.image_width)
    raise ValueError(f"encoding {encoding.mode!r} not defined for the treasure grid")


def encode_mc(state: MountainCarState, encoding: StateEncoding) -> np.ndarray:
    if encoding.mode == "vector":
        return np.array(
            [
                (state.position + 0.3) / 0.9,
                state.velocity / MC_VELOCITY_MAX,
            ]
        )
    if encoding.mode == "image":
        return render_mountain_car(state, encoding.image_height, encoding.image_width)
    raise ValueError(f"encoding {encoding.mode!r} not defined for the mountain car")


def render_dst(grid: GridSpec, state: DstState, height: int, width: int) -> np.ndarray:
    """Grayscale top-down view, one block per cell: dark floor, mid-gray
    water, light treasure, white agent. Shape (height, width, 1)."""
    img = np.full((height, width), _GRAY_FLOOR)

    def block(row: int, col: int) -> tuple[slice, slice]:
        return (
            slice(row * height // grid.rows, (row + 1) * height // grid.rows),
            slice(col * width // grid.cols, (col + 1) * width // grid.cols),
        )

    for row in range(grid.rows):
        for col in range(grid.cols):
            if grid.accessible(row, col):
                level = _GRAY_WATER
                if grid.treasure_value(row, col) is not None:
                    level = _GRAY_TREASURE
                img[block(row, col)] = level
    img[block(state.row, state.col)] = _GRAY_AGENT
    return img[:, :, np.newaxis]


def render_mountain_car(state: MountainCarState, height: int, width: int) -> np.ndarray:
    """Side view: the valley profile sin(3p) as a mid-gray curve on a
    black background, the car as a white block. Shape (height, width, 1)."""
    img = np.zeros((height, width))
    span = MC_POSITION_MAX - MC_POSITION_MIN

    def row_of(position: float) -> int:
        y = math.sin(3.0 * position)  # in [-1, 1], higher means higher up
        return round((1.0 - (y + 1.0) / 2.0) * (height - 1))

    for x in range(width):
        position = MC_POSITION_MIN + span * (x + 0.5) / width
        img[row_of(position), x] = 0.5
    car_x = round((state.position - MC_POSITION_MIN) / span * (width - 1))
    car_y = row_of(state.position)
    lo_y, hi_y = max(0, car_y - 1), min(height, car_y + 2)
    lo_x, hi_x = max(0, car_x - 1), min(width, car_x + 2)
    img[lo_y:hi_y, lo_x:hi_x] = _GRAY_AGENT
    return img[:, :, np.newaxis]


@dataclass(frozen=True)
class EnvSpec:
    """Everything needed to build a fresh environment instance (the
    action-repeat count lives with the agent hyperparameters and is
    passed to :func:`build_env` separately). Encoding defaults to the
    natural one for the kind: one-hot cells for the grid, the rescaled
    (position, velocity) pair for the car."""

    kind: str  # "dst" | "mountain_car"
    width: int = 3
    encoding: StateEncoding | None = None
    max_frames: int = 100

    def __post_init__(self) -> None:
        if self.kind not in ("dst", "mountain_car"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if self.encoding is None:
            mode = "one_hot" if self.kind == "dst" else "vector"
            object.__setattr__(self, "encoding", StateEncoding(mode))
        if self.max_frames < 1:
            raise ValueError("max_frames must be positive")
        # Fail fast on encoding/kind mismatches.
        if self.kind == "dst" and self.encoding.mode == "vector":
            raise ValueError("vector encoding is only defined for the mountain car")
        if self.kind == "mountain_car" and self.encoding.mode == "one_hot":
            raise ValueError("one-hot encoding is only defined for the treasure grid")


@dataclass(frozen=True)
class StepResult:
    """What an environment wrapper hands back per decision."""

    obs: np.ndarray
    reward: np.ndarray
    terminal: bool
    truncated: bool
    frames: int  # physics frames consumed by this decision


class DeepSeaTreasureEnv:
    n_actions = 4
    n_objectives = 2
    action_names = DST_ACTION_NAMES

    def __init__(self, grid: GridSpec, encoding: StateEncoding):
        self.grid = grid
        self.encoding = encoding
        self.state = dst_reset(grid)
        self.frames_consumed = 0

    @property
    def observation_shape(self) -> tuple[int, ...]:
        return encode_dst(self.grid, self.state, self.encoding).shape

    def reset(self) -> np.ndarray:
        self.state = dst_reset(self.grid)
        return self.observe()

    def observe(self) -> np.ndarray:
        return encode_dst(self.grid, self.state, self.encoding)

    def step(self, action: int) -> StepResult:
        raw = dst_step(self.grid, self.state, action)
        frames = raw.next_state.frames - self.state.frames
        self.frames_consumed += frames
        self.state = raw.next_state
        return StepResult(self.observe(), raw.reward, raw.terminal, raw.truncated, frames)


class MountainCarEnv:
    n_actions = 3
    n_objectives = 3
    action_names = MC_ACTION_NAMES

    def __init__(
        self,
        encoding: StateEncoding,
        action_repeat: int = 1,
        max_frames: int = MC_FRAME_CAP,
    ):
        self.encoding = encoding
        self.action_repeat = action_repeat
        self.max_frames = max_frames
        self.state = mc_reset()
        self.frames_consumed = 0

    @property
    def observation_shape(self) -> tuple[int, ...]:
        return encode_mc(self.state, self.encoding).shape

    def reset(self) -> np.ndarray:
        self.state = mc_reset()
        return self.observe()

    def observe(self) -> np.ndarray:
        return encode_mc(self.state, self.encoding)

    def step(self, action: int) -> StepResult:
        raw = mc_step(self.state, action, self.action_repeat, self.max_frames)
        frames = raw.next_state.frames - self.state.frames
        self.frames_consumed += frames
        self.state = raw.next_state
        return StepResult(self.observe(), raw.reward, raw.terminal, raw.truncated, frames)


def build_env(
    spec: EnvSpec, action_repeat: int = 1
) -> DeepSeaTreasureEnv | MountainCarEnv:
    if spec.kind == "dst":
        if action_repeat != 1:
            raise ValueError("the treasure grid does not use action repeat")
        return DeepSeaTreasureEnv(dst_layout(spec.width, spec.max_frames), spec.encoding)
    return MountainCarEnv(spec.encoding, action_repeat, spec.max_frames)
