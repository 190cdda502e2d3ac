"""Tests for the bucketed constructions: layouts, laziness, marginals."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minwise_lab.construction import (
    BucketedKMinwiseFamily,
    BucketedMinwiseFamily,
    ConstructionParams,
    SeedLayout,
    build_kminwise,
    build_minwise,
    family_from_config,
    params_from_config,
    prg_from_config,
    seed_layout,
)
from minwise_lab.errors import ParamViolation
from minwise_lab.extractor import LeftoverHash
from minwise_lab.kwise import TWiseFamily, dsum_values
from minwise_lab.rectprg import FullIndependencePRG, RecursiveMixPRG, TWisePRG


def desk_minwise(prg1=None) -> BucketedMinwiseFamily:
    """N=M=4, four buckets, 23 packed seed bits with the default PRG1."""
    params = ConstructionParams(N=4, M=4, k=1, ell=4, t=2)
    prg1 = prg1 or TWisePRG(2, 4, 64)
    return build_minwise(params, prg1, TWisePRG(1, 4, 4), LeftoverHash(7, 6))


def desk_kminwise(k: int = 1) -> BucketedKMinwiseFamily:
    """N=M=4 with the overlay family; 21 packed seed bits at k=1."""
    params = ConstructionParams(N=4, M=4, k=k, ell=4, t=2)
    return build_kminwise(
        params, TWisePRG(2, 4, 4), TWisePRG(1, 4, 4), LeftoverHash(3, 2)
    )


MINWISE_CONFIG = {
    "family": "minwise",
    "N": 4, "M": 4, "k": 1, "ell": 4, "t": 2,
    "prg1": {"kind": "twise", "t": 2},
    "prg2": {"kind": "twise", "t": 1},
    "extractor": {"kind": "leftover_hash", "n": 7, "m": 6},
}


def test_seed_accounting_minwise():
    fam = desk_minwise()
    assert fam.seed_bits == 23
    assert fam.layout.names() == ["g-seed", "prg1-seed", "w"]
    assert [f.width for f in fam.layout.fields] == [4, 12, 7]
    assert [f.offset for f in fam.layout.fields] == [0, 4, 16]
    assert fam.g.seed_bits + fam.prg1.seed_bits + fam.extractor.n == 23


def test_seed_accounting_kminwise():
    fam = desk_kminwise()
    assert fam.seed_bits == 21
    assert fam.layout.names() == ["g-seed", "prg1-seed", "w", "h0-seed"]
    assert [f.width for f in fam.layout.fields] == [4, 4, 3, 10]
    assert fam.overlay.t == 5  # (C_e + 1) * k


def test_determinism_across_instances():
    a, b = desk_minwise(), desk_minwise()
    assert a.family_id == b.family_id
    for seed in (0, 1, 0x7FFFFF, 0x5A5A5A & 0x7FFFFF):
        for x in range(1, 5):
            assert a.eval(seed, x) == b.eval(seed, x)
            assert 1 <= a.eval(seed, x) <= 4


def test_eval_block_matches_scalar_eval():
    for fam in (desk_minwise(), desk_kminwise()):
        seeds = np.arange(0, fam.seed_space, 97, dtype=np.uint64)
        for x in range(1, 5):
            block = fam.eval_block(seeds, x)
            assert block.tolist() == [fam.eval(int(s), x) for s in seeds]


def test_evaluation_is_lazy_in_other_buckets():
    # with a chunked PRG1, coordinate i reads only its own bit chunk, so
    # h(x) must ignore every chunk belonging to a bucket other than g(x)
    fam = desk_minwise(prg1=FullIndependencePRG(4, 64))
    assert fam.seed_bits == 4 + 24 + 7
    prg1_field = fam.layout.field("prg1-seed")
    rng = np.random.Generator(np.random.Philox(key=11))
    for seed in rng.integers(0, fam.seed_space, size=12):
        seed = int(seed)
        for x in range(1, 5):
            bucket = fam.g.eval(fam.layout.unpack(seed)["g-seed"], x)
            before = fam.eval(seed, x)
            for i in range(1, 5):
                if i == bucket:
                    continue
                for bit in range(6 * (i - 1), 6 * i):
                    flipped = seed ^ (1 << (prg1_field.offset + bit))
                    assert fam.eval(flipped, x) == before


def test_kminwise_overlay_marginals_are_exactly_uniform():
    # freezing everything but the overlay seed leaves each point's value,
    # and each pair's joint value, exactly uniform
    fam = desk_kminwise()
    h0 = fam.layout.field("h0-seed")
    rng = np.random.Generator(np.random.Philox(key=5))
    for rest in rng.integers(0, 1 << h0.offset, size=4):
        base = int(rest)
        seeds = np.asarray(
            [base | (s << h0.offset) for s in range(1 << h0.width)],
            dtype=np.uint64,
        )
        v1 = fam.eval_block(seeds, 1)
        v3 = fam.eval_block(seeds, 3)
        assert np.bincount(v1.astype(int), minlength=5)[1:].tolist() == [256] * 4
        joint = np.bincount(
            ((v1 - 1) * 4 + (v3 - 1)).astype(int), minlength=16
        )
        assert joint.tolist() == [64] * 16


def test_minwise_values_decompose_through_the_direct_sum():
    # h(x) recombines the inner family and PRG2 exactly as advertised
    fam = desk_minwise()
    for seed in (3, 1 << 16, 0x3FDE21, 0x70001F):
        seed &= fam.seed_space - 1
        parts = fam.layout.unpack(seed)
        for x in range(1, 5):
            bucket = fam.g.eval(parts["g-seed"], x)
            s = fam.prg1.coord_eval(parts["prg1-seed"], bucket) - 1
            z = fam.extractor.extract(parts["w"], s)
            want = dsum_values(
                fam.inner.eval(z & 0xF, x),
                fam.prg2.coord_eval(z >> 4, x),
                4,
            )
            assert fam.eval(seed, x) == want


def test_single_bucket_collapse():
    # ell = 1: no allocation bits, one extractor seed for everything
    params = ConstructionParams(N=4, M=4, k=1, ell=1, t=2)
    fam = build_minwise(
        params, FullIndependencePRG(1, 64), TWisePRG(1, 4, 4), LeftoverHash(7, 6)
    )
    assert fam.g.seed_bits == 0
    assert fam.seed_bits == 6 + 7
    for seed in range(0, fam.seed_space, 5):
        parts = fam.layout.unpack(seed)
        z = fam.extractor.extract(
            parts["w"], fam.prg1.coord_eval(parts["prg1-seed"], 1) - 1
        )
        for x in range(1, 5):
            want = dsum_values(
                fam.inner.eval(z & 0xF, x), fam.prg2.coord_eval(z >> 4, x), 4
            )
            assert fam.eval(seed, x) == want


@given(st.integers(min_value=0, max_value=(1 << 23) - 1))
@settings(max_examples=80, deadline=None)
def test_layout_pack_unpack_round_trip(seed):
    layout = SeedLayout.build([("g-seed", 4), ("prg1-seed", 12), ("w", 7)])
    assert layout.pack(layout.unpack(seed)) == seed


def test_layout_rejects_overwide_values():
    layout = SeedLayout.build([("a", 3), ("b", 5)])
    assert layout.pack({"a": 7, "b": 31}) == 7 | (31 << 3)
    with pytest.raises(ParamViolation):
        layout.pack({"a": 8, "b": 0})
    with pytest.raises(KeyError):
        layout.field("c")


def test_wide_seed_blocks_agree_with_scalar_path():
    # 95 packed bits: draw_seed_block switches to one column per field
    params = ConstructionParams(N=12, M=64, k=2, ell=4, t=2)
    fam = build_kminwise(
        params, TWisePRG(2, 4, 64), TWisePRG(1, 12, 64), LeftoverHash(7, 6)
    )
    assert fam.seed_bits == 95
    rng = np.random.Generator(np.random.Philox(key=21))
    block = fam.draw_seed_block(rng, 40)
    assert block.shape == (40, 4)
    for x in (1, 7, 12):
        vals = fam.eval_block(block, x)
        for row, got in zip(block, vals):
            packed = fam.layout.pack(
                {f.name: int(v) for f, v in zip(fam.layout.fields, row)}
            )
            assert fam.eval(packed, x) == got


def test_param_validation():
    with pytest.raises(ParamViolation):
        ConstructionParams(N=4, M=3)            # alphabet not a power of two
    with pytest.raises(ParamViolation):
        ConstructionParams(N=4, M=4, ell=3)     # bucket count not a power of two
    with pytest.raises(ParamViolation):
        ConstructionParams(N=4, M=4, C_e=3, C_s=3)
    with pytest.raises(ParamViolation):
        ConstructionParams(N=4, M=4, k=5)       # k > N
    with pytest.raises(ParamViolation):
        ConstructionParams(N=32, M=4, k=26)     # k above the polylog cap
    ConstructionParams(N=32, M=4, k=26, k_cap=32)  # explicit cap lifts it


def test_component_shape_validation():
    params = ConstructionParams(N=4, M=4, k=1, ell=4, t=2)
    good = dict(prg1=TWisePRG(2, 4, 64), prg2=TWisePRG(1, 4, 4),
                extractor=LeftoverHash(7, 6))
    build_minwise(params, **good)
    with pytest.raises(ParamViolation):
        build_minwise(params, TWisePRG(2, 8, 64), good["prg2"], good["extractor"])
    with pytest.raises(ParamViolation):
        build_minwise(params, TWisePRG(2, 4, 32), good["prg2"], good["extractor"])
    with pytest.raises(ParamViolation):
        build_minwise(params, good["prg1"], TWisePRG(1, 4, 8), good["extractor"])
    with pytest.raises(ParamViolation):
        # extractor output must split into inner seed + PRG2 seed
        build_minwise(params, TWisePRG(2, 4, 32), good["prg2"], LeftoverHash(6, 5))
    with pytest.raises(ParamViolation):
        build_minwise(ConstructionParams(N=4, M=4, k=2, ell=4, t=2), **good)
    with pytest.raises(ParamViolation):
        # k-min-wise wants extractor output == PRG2 seed exactly
        build_kminwise(params, TWisePRG(2, 4, 64), TWisePRG(1, 4, 4),
                       LeftoverHash(7, 6))


def test_seed_layout_helper_matches_builders():
    params = ConstructionParams(N=4, M=4, k=1, ell=4, t=2)
    lay = seed_layout(params, TWisePRG(2, 4, 64), TWisePRG(1, 4, 4),
                      LeftoverHash(7, 6))
    assert lay.total_bits == 23
    with pytest.raises(ValueError):
        seed_layout(params, TWisePRG(2, 4, 64), TWisePRG(1, 4, 4),
                    LeftoverHash(7, 6), kind="else")


def test_family_from_config_round_trip():
    fam = family_from_config(MINWISE_CONFIG)
    ref = desk_minwise()
    assert isinstance(fam, BucketedMinwiseFamily)
    assert fam.family_id == ref.family_id
    assert fam.eval(0x123456 & 0x7FFFFF, 2) == ref.eval(0x123456 & 0x7FFFFF, 2)


def test_family_from_config_defaults_to_kminwise_when_k_above_one():
    cfg = {
        "N": 4, "M": 4, "k": 2, "ell": 4, "t": 2,
        "prg1": {"kind": "twise", "t": 2},
        "prg2": {"kind": "twise", "t": 1},
        "extractor": {"kind": "leftover_hash", "n": 3, "m": 2},
    }
    fam = family_from_config(cfg)
    assert isinstance(fam, BucketedKMinwiseFamily)
    assert fam.overlay.t == 10


def test_config_validation():
    with pytest.raises(ParamViolation):
        params_from_config({"N": 4})
    with pytest.raises(ParamViolation):
        family_from_config({**MINWISE_CONFIG, "family": "sketchy"})
    missing = dict(MINWISE_CONFIG)
    del missing["prg1"]
    with pytest.raises(ParamViolation):
        family_from_config(missing)
    with pytest.raises(ParamViolation):
        prg_from_config({"kind": "twise"}, 4, 4)
    with pytest.raises(ParamViolation):
        prg_from_config({"kind": "full_independence", "claimed_error": 0.1}, 4, 4)
    with pytest.raises(ParamViolation):
        prg_from_config({"kind": "unheard_of"}, 4, 4)
    with pytest.raises(ParamViolation):
        prg_from_config("twise", 4, 4)
    assert isinstance(prg_from_config({"kind": "recursive_mix"}, 4, 4),
                      RecursiveMixPRG)


def test_design_widths_report():
    params = ConstructionParams(N=256, M=256, k=2, ell=16, t=4)
    for kind in ("minwise", "kminwise"):
        w = params.design_widths(kind)
        assert set(w) == {"source_bits", "output_bits", "per_bucket_seed_bits"}
        assert all(isinstance(v, int) and v > 0 for v in w.values())
    assert params.design_widths("kminwise")["source_bits"] > \
        params.design_widths("minwise")["source_bits"]
    with pytest.raises(ValueError):
        params.design_widths("other")


def test_target_error_and_derived_degrees():
    params = ConstructionParams(N=4, M=4, k=2, ell=4, t=3)
    assert params.target_error == 0.125
    assert params.allocation_independence == 4
    assert params.overlay_independence == 10
    assert params.inner_independence == 2
