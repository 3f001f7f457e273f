import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levelmix import corpus as cp
from levelmix import playability as pl
from levelmix.errors import UncoveredTile, UnsupportedGame

SOLIDITY = {"-": "passable", "X": "solid", "E": "hazard"}


def horizontal_rules(**overrides):
    kw = dict(game="t", solidity=dict(SOLIDITY), axis="horizontal")
    kw.update(overrides)
    return pl.PlayabilityRules(**kw)


def vertical_rules(**overrides):
    kw = dict(game="t", solidity=dict(SOLIDITY), axis="vertical")
    kw.update(overrides)
    return pl.PlayabilityRules(**kw)


def grid(rows):
    return list(rows)


def flat_ground_chunk():
    rows = ["-" * 16] * 14 + ["X" * 16] * 2
    return rows


def test_flat_ground_playable():
    ok, path = pl.crossable(flat_ground_chunk(), horizontal_rules())
    assert ok
    assert path[0][1] == 0 and path[-1][1] == 15


def test_solid_wall_unplayable():
    rows = ["-" * 8 + "X" + "-" * 7] * 14 + ["X" * 16] * 2
    ok, path = pl.crossable(rows, horizontal_rules())
    assert not ok and path is None


def test_wall_with_gap_playable():
    # wall spans all but the top rows: a 4-high jump clears it
    wall_col = 8
    rows = []
    for r in range(16):
        if r >= 10 and r < 14:
            rows.append("-" * wall_col + "X" + "-" * (16 - wall_col - 1))
        elif r >= 14:
            rows.append("X" * 16)
        else:
            rows.append("-" * 16)
    assert pl.crossable(rows, horizontal_rules())[0]


def test_pit_too_wide_unplayable():
    # a 12-wide pit exceeds the maximal airborne span
    rows = ["-" * 16] * 14 + ["XX" + "-" * 12 + "XX"] * 2
    assert not pl.crossable(rows, horizontal_rules())[0]


def test_small_pit_playable():
    rows = ["-" * 16] * 14 + ["XXXXX" + "--" + "XXXXXXXXX"] * 2
    assert pl.crossable(rows, horizontal_rules())[0]


def test_hazard_is_passable_for_movement():
    rows = ["-" * 16] * 14 + ["E" * 16] + ["X" * 16]
    assert pl.crossable(rows, horizontal_rules())[0]


def test_no_start_unplayable():
    rows = ["-" * 16] * 16  # nothing to stand on anywhere
    assert not pl.crossable(rows, horizontal_rules())[0]


def test_vertical_ladder_of_platforms_playable():
    rows = ["-" * 16 for _ in range(16)]
    # platforms every 3 rows, wide enough to hop between
    for r in (1, 4, 7, 10, 13):
        rows[r] = "--XXXX----XXXX--"
    ok, path = pl.crossable(rows, vertical_rules())
    assert ok
    assert path[-1][0] == 0


def test_vertical_unreachable_top():
    rows = ["-" * 16 for _ in range(16)]
    rows[13] = "XXXXXXXXXXXXXXXX"  # one low platform, gap of 13 rows above
    assert not pl.crossable(rows, vertical_rules())[0]


def test_uncovered_tile_raises():
    rows = ["?" * 16] * 16
    with pytest.raises(UncoveredTile):
        pl.crossable(rows, horizontal_rules())


def test_mixed_axis_rules_rejected():
    with pytest.raises(UnsupportedGame):
        pl.PlayabilityRules(game="mm", solidity=dict(SOLIDITY), axis="both")


def test_playable_accepts_chunks(toy_setup):
    vocab = toy_setup["vocab"]
    rules = pl.PlayabilityRules(game="toy", solidity=dict(toygame_solidity()), axis="horizontal")
    flat = cp.Chunk(tiles=np.zeros((16, 16), dtype=np.int64))
    flat.tiles[14:, :] = vocab.id_of("X")
    ok, _ = pl.playable(flat, rules, vocab)
    assert ok


def toygame_solidity():
    from levelmix import toygame

    return toygame.SOLIDITY


def test_playable_deterministic():
    rows = flat_ground_chunk()
    r1 = pl.crossable(rows, horizontal_rules())
    r2 = pl.crossable(rows, horizontal_rules())
    assert r1 == r2


def random_grid(seed, height=8, width=8, density=None):
    rng = np.random.default_rng(seed)
    if density is None:
        density = rng.uniform(0.1, 0.6)
    cells = rng.random((height, width)) < density
    return ["".join("X" if cells[r, c] else "-" for c in range(width)) for r in range(height)]


def test_astar_equals_bfs_on_many_random_grids():
    # exhaustive sweep of seeded 8x8 grids across densities, both axes
    mismatches = []
    for seed in range(300):
        rows = random_grid(seed)
        for rules in (horizontal_rules(), vertical_rules()):
            astar = pl.crossable(rows, rules)[0]
            bfs = pl.bfs_crossable(rows, rules)
            if astar != bfs:
                mismatches.append((seed, rules.axis))
    assert mismatches == []


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**31 - 1),
    st.floats(min_value=0.05, max_value=0.7),
    st.sampled_from(["horizontal", "vertical"]),
)
def test_astar_equals_bfs_property(seed, density, axis):
    rows = random_grid(seed, density=density)
    rules = horizontal_rules() if axis == "horizontal" else vertical_rules()
    assert pl.crossable(rows, rules)[0] == pl.bfs_crossable(rows, rules)


def test_astar_path_is_valid_when_found():
    # every returned path hop moves at most one cell in each direction
    for seed in range(60):
        rows = random_grid(seed, density=0.35)
        ok, path = pl.crossable(rows, horizontal_rules())
        if not ok:
            continue
        for (r0, c0), (r1, c1) in zip(path, path[1:]):
            assert abs(r0 - r1) <= 1 and abs(c0 - c1) <= 1


def test_jump_height_limit_respected():
    # a ledge 5 tiles up is unreachable with max_jump_height 4
    rows = ["-" * 16 for _ in range(16)]
    rows[15] = "X" * 8 + "-" * 8
    rows[9] = "-" * 8 + "X" * 8  # ledge top at row 9, standing row 8
    reachable_5 = pl.crossable(rows, horizontal_rules(max_jump_height=6))[0]
    reachable_4 = pl.crossable(rows, horizontal_rules(max_jump_height=4))[0]
    assert reachable_5 and not reachable_4


def test_playability_suite_counts(toy_setup):
    vocab = toy_setup["vocab"]
    rules = pl.PlayabilityRules(game="toy", solidity=dict(toygame_solidity()), axis="horizontal")
    flat = cp.Chunk(tiles=np.zeros((16, 16), dtype=np.int64))
    flat.tiles[14:, :] = vocab.id_of("X")

    def gen(component, n, rng):
        return [flat] * n

    result = pl.playability_suite(gen, 3, rules, vocab, np.random.default_rng(0), total_budget=100)
    assert result.total == 3 * (100 // 3)
    assert result.fraction == 1.0
    assert result.per_component == [(33, 33)] * 3


def test_playability_suite_flat_generator_fraction_one():
    # arithmetic of floor(budget / k) with k = 10
    vocab = cp.TileVocab(game="t", chars=("-", "X"))
    flat = cp.Chunk(tiles=np.zeros((16, 16), dtype=np.int64))
    flat.tiles[15, :] = 1
    rules = pl.PlayabilityRules(game="t", solidity={"-": "passable", "X": "solid"}, axis="horizontal")
    gen = lambda component, n, rng: [flat] * n
    result = pl.playability_suite(gen, 10, rules, vocab, np.random.default_rng(0), total_budget=10000)
    assert result.total == 10_000
    assert result.per_component == [(1000, 1000)] * 10
    assert result.fraction == 1.0


def test_rules_from_manifest(tmp_path):
    from levelmix import toygame

    manifest_path = toygame.write_corpus(tmp_path / "toy", levels_per_type=1, cols=20, seed=0)
    manifest = cp.load_manifest(manifest_path)
    rules = pl.rules_from_manifest(manifest)
    assert rules.axis == "horizontal"
    assert rules.max_jump_height == 4
    assert rules.max_jump_span == 5
    assert rules.solidity["X"] == "solid"
