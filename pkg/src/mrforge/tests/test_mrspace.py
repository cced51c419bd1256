import pytest

from mrforge import perturb
from mrforge.config import SearchConfig
from mrforge.errors import (
    CompositionFailed,
    InsufficientCatalog,
    InvalidGroup,
)
from mrforge.mrspace import (
    Bond,
    CmbMR,
    MRGroup,
    SingleMR,
    build_set_mr,
    canonicalize,
    comb_gen,
    compose,
    link,
    random_cmb_mr,
    repair,
    validate_group,
)
from mrforge.rng import SeededRng

TEXT = "Nothing - All good for purpose"


def cmb(*keys):
    return CmbMR(tuple(SingleMR(pid, n) for pid, n in keys))


def test_build_set_mr():
    set_mr = build_set_mr(perturb.catalog(), [1, 2, 4])
    assert len(set_mr) == 3 * len(perturb.catalog())
    assert [mr.mr_index for mr in set_mr] == list(range(len(set_mr)))
    assert set_mr[0].key == f"{perturb.catalog()[0].id}:1"


def test_link_and_or():
    mr10, mr2, mr5 = (SingleMR("swap_character", i) for i in (1, 2, 4))
    members = link([mr10, mr2, mr5], [Bond.AND, Bond.OR], max_depth=4)
    assert members == [CmbMR((mr10, mr2)), CmbMR((mr5,))]


def test_link_all_or_gives_singletons():
    mrs = [SingleMR("swap_character", i) for i in (1, 2, 4)]
    members = link(mrs, [Bond.OR, Bond.OR], max_depth=4)
    assert members == [CmbMR((mr,)) for mr in mrs]


def test_link_respects_depth():
    mrs = [SingleMR("swap_character", i) for i in range(1, 6)]
    members = link(mrs, [Bond.AND] * 4, max_depth=2)
    assert [len(m) for m in members] == [2, 2, 1]
    with pytest.raises(ValueError):
        link(mrs, [Bond.AND], max_depth=2)


def test_comb_gen_bounds(set_mr):
    config = SearchConfig(group_min=3, group_max=8, max_combo_depth=4)
    for seed in range(300):
        group = comb_gen(set_mr, config, SeededRng(seed))
        validate_group(group, config)
        assert 3 <= len(group) <= 8
        assert all(1 <= len(m) <= 4 for m in group)


def test_comb_gen_is_deterministic(set_mr):
    config = SearchConfig()
    assert comb_gen(set_mr, config, SeededRng(4)) == comb_gen(
        set_mr, config, SeededRng(4)
    )


def test_comb_gen_needs_enough_mrs():
    with pytest.raises(InsufficientCatalog):
        comb_gen(
            [SingleMR("swap_character", 1)], SearchConfig(), SeededRng(0)
        )


def test_repair_pads_and_trims(set_mr):
    config = SearchConfig(group_min=3, group_max=4)
    padded = repair([cmb(("swap_character", 1))], set_mr, config, SeededRng(0))
    assert len(padded) == 3
    assert padded[0] == cmb(("swap_character", 1))
    assert len({m for m in padded}) == 3

    many = [CmbMR((mr,)) for mr in set_mr[:10]]
    trimmed = repair(many, set_mr, config, SeededRng(0))
    assert len(trimmed) == 4
    assert trimmed == [m for m in many if m in trimmed]


def test_random_cmb_mr(set_mr):
    config = SearchConfig(max_combo_depth=3)
    rng = SeededRng(2)
    for _ in range(100):
        member = random_cmb_mr(set_mr, config, rng)
        assert 1 <= len(member) <= 3
        assert len(set(member.parts)) == len(member)


def test_cmb_id_keeps_order():
    a = cmb(("delete_character", 1), ("swap_character", 2))
    b = cmb(("swap_character", 2), ("delete_character", 1))
    assert a.id == "delete_character:1&swap_character:2"
    assert a.id != b.id
    assert a.perturbation_ids == ("delete_character", "swap_character")


def test_canonicalize():
    a, b = cmb(("swap_character", 1)), cmb(("delete_character", 1))
    group = MRGroup((a, b))
    assert canonicalize(group).members == (b, a)
    assert canonicalize(canonicalize(group)) == canonicalize(group)


def test_group_id_ignores_member_order():
    members = [cmb(("swap_character", i)) for i in (1, 2, 4)]
    members.append(cmb(("delete_character", 1), ("shuffle_word", 2)))
    ids = {
        MRGroup(tuple(SeededRng(seed).shuffled(members))).id
        for seed in range(10)
    }
    assert len(ids) == 1


def test_group_dict_roundtrip_checks_id(set_mr):
    group = comb_gen(set_mr, SearchConfig(), SeededRng(1))
    data = group.to_dict()
    assert MRGroup.from_dict(data, set_mr) == group
    data["id"] = "0" * 16
    with pytest.raises(InvalidGroup):
        MRGroup.from_dict(data, set_mr)


def test_validate_group():
    config = SearchConfig(group_min=3, group_max=4, max_combo_depth=2)
    small = MRGroup((cmb(("swap_character", 1)),))
    with pytest.raises(InvalidGroup):
        validate_group(small, config)
    deep = MRGroup(
        (
            cmb(("swap_character", 1)),
            cmb(("swap_character", 2)),
            cmb(*[("delete_character", i) for i in (1, 2, 4)]),
        )
    )
    with pytest.raises(InvalidGroup):
        validate_group(deep, config)


def test_empty_cmb_is_invalid():
    with pytest.raises(InvalidGroup):
        CmbMR(())


def test_compose_single_part():
    out = compose(cmb(("delete_character", 1)), TEXT, SeededRng(0))
    assert len(out) == len(TEXT) - 1


def test_compose_identity_fallback():
    out = compose(cmb(("synonym_replace", 1)), "Zyx qwv", SeededRng(0))
    assert out == "Zyx qwv"


def test_compose_is_staged():
    member = cmb(("delete_character", 2), ("swap_character", 1))
    rng = SeededRng(8)
    out = compose(member, TEXT, rng)
    stage = perturb.apply("delete_character", TEXT, 2, rng.fork("part", 0))
    assert len(stage) == len(TEXT) - 2
    assert out == perturb.apply("swap_character", stage, 1, rng.fork("part", 1))


def test_compose_failure():
    member = cmb(("delete_word", 1))
    with pytest.raises(CompositionFailed):
        compose(member, "single", SeededRng(0))
