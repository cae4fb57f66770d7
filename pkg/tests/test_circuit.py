import numpy as np
import pytest

from shorent import numtheory as nt
from shorent.circuit import (
    CheckpointId,
    InvalidInstanceError,
    ShorInstance,
    Stage,
    final_distribution,
    prepare_initial,
    run_full,
    run_modexp,
    sample_outcome,
)
from shorent.entanglement import register_entropy, register_rdm
from oracles import distribution_fft, final_state_fft, modexp_state


def test_instance_validation():
    with pytest.raises(InvalidInstanceError):
        ShorInstance(15, 5)
    with pytest.raises(InvalidInstanceError):
        ShorInstance(15, 1)
    with pytest.raises(InvalidInstanceError):
        ShorInstance(15, 15)
    with pytest.raises(InvalidInstanceError):
        ShorInstance(129, 2)
    with pytest.raises(InvalidInstanceError):
        ShorInstance(13, 2, strict=True)
    with pytest.warns(UserWarning):
        inst = ShorInstance(13, 2)
    assert inst.warning
    assert ShorInstance(129, 2, max_qubits=24).n == 8


def test_instance_fields():
    inst = ShorInstance(119, 92)
    assert (inst.n, inst.M, inst.period) == (7, 1 << 14, 16)
    assert inst.layout.total == 21


def test_checkpoint_order_and_labels():
    cps = [
        CheckpointId.init(),
        CheckpointId.after_modexp(0),
        CheckpointId.after_modexp(7),
        CheckpointId.iqft_step(3),
        CheckpointId.after_iqft(),
        CheckpointId.post_measurement(64),
    ]
    assert cps == sorted(cps)
    for cp in cps:
        assert CheckpointId.parse(cp.label) == cp


@pytest.mark.parametrize("N, mag", [(15, 1 / 16), (21, 1 / 32)])
def test_prepare_initial(N, mag):
    inst = ShorInstance(N, 2)
    s = prepare_initial(inst)
    nz = np.flatnonzero(np.abs(s.amps) > 1e-15)
    assert len(nz) == inst.M
    assert np.allclose(np.abs(s.amps[nz]), mag)
    assert set(nz % inst.layout.lower_dim) == {1}


def test_modexp_high_gates_idle_for_15_13():
    inst = ShorInstance(15, 13)
    snaps = {}
    run_modexp(prepare_initial(inst), inst, lambda cp, s: snaps.setdefault(cp.index, s.amps.copy()))
    for j in range(2, 8):
        assert np.array_equal(snaps[j], snaps[1])


@pytest.mark.parametrize("N, x", [(15, 13), (21, 2), (33, 5), (35, 4)])
def test_modexp_matches_closed_form(N, x):
    inst = ShorInstance(N, x)
    s = run_modexp(prepare_initial(inst), inst)
    assert np.allclose(s.amps, modexp_state(N, x), atol=1e-12)


@pytest.mark.parametrize("N, x", [(15, 13), (15, 7), (21, 2), (21, 13), (33, 5), (35, 2)])
def test_full_run_matches_fft_oracle(backend, N, x):
    inst = ShorInstance(N, x)
    s = run_full(inst)
    assert np.allclose(s.amps, final_state_fft(N, x), atol=1e-12)


def test_distribution_15_13():
    d = final_distribution(ShorInstance(15, 13))
    nz = np.flatnonzero(d > 1e-12)
    assert list(nz) == [0, 64, 128, 192]
    assert np.allclose(d[nz], 0.25)


def test_distribution_119_92_and_93():
    d = final_distribution(ShorInstance(119, 92))
    nz = np.flatnonzero(d > 1e-12)
    assert list(nz) == [k * 1024 for k in range(16)]
    assert np.allclose(d[nz], 1 / 16)
    d = final_distribution(ShorInstance(119, 93))
    grid = sorted({round(k * 16384 / 24) for k in range(24)})
    assert 1 - d[grid].sum() > 0.02
    assert np.allclose(d, distribution_fft(119, 93), atol=1e-12)


def test_checkpoints_in_pipeline_order():
    seen = []
    run_full(ShorInstance(15, 13), lambda cp, s: seen.append(cp), fine_iqft=True)
    assert seen == sorted(seen)
    assert seen[0] == CheckpointId.init()
    assert sum(cp.stage is Stage.IQFT for cp in seen) == 1
    assert sum(cp.stage is Stage.MODEXP for cp in seen) == 8
    # 8 Hadamards, 28 rotations, 4 swaps
    assert sum(cp.stage is Stage.IQFT_STEP for cp in seen) == 40


def test_fine_iqft_off_by_default():
    seen = []
    run_full(ShorInstance(15, 13), lambda cp, s: seen.append(cp))
    assert not any(cp.stage is Stage.IQFT_STEP for cp in seen)


@pytest.mark.parametrize("N", [15, 21, 33, 35])
def test_modexp_entropy_monotone_and_iqft_invariance(N):
    for x in nt.coprimes(N)[:6]:
        inst = ShorInstance(N, x)
        lay = inst.layout
        ent, lower = [], {}

        def hook(cp, s):
            if cp.stage is Stage.MODEXP:
                ent.append(register_entropy(s, lay))
            if cp == CheckpointId.after_modexp(lay.upper_width - 1) or cp.stage is Stage.IQFT:
                lower[cp.stage] = register_rdm(s, lay, "lower").matrix
                if cp.stage is Stage.IQFT:
                    assert abs(register_entropy(s, lay) - ent[-1]) < 1e-9

        run_full(inst, hook)
        assert all(b >= a - 1e-9 for a, b in zip(ent, ent[1:]))
        assert np.max(np.abs(lower[Stage.MODEXP] - lower[Stage.IQFT])) < 1e-9


def test_sample_outcome_contracts():
    point = np.zeros(8)
    point[5] = 1
    assert all(sample_outcome(point, s) == 5 for s in range(20))
    uni = np.full(4, 0.25)
    assert sample_outcome(uni, 7) == sample_outcome(uni, 7)
    with pytest.raises(ValueError):
        sample_outcome(np.full(4, 0.3), 0)


def test_sample_frequencies_15_13():
    d = final_distribution(ShorInstance(15, 13))
    rng = np.random.default_rng(123)
    hits = np.bincount([sample_outcome(d, rng) for _ in range(10_000)], minlength=256)
    for c in (0, 64, 128, 192):
        assert abs(hits[c] / 10_000 - 0.25) < 0.02
    assert hits.sum() == hits[[0, 64, 128, 192]].sum()
