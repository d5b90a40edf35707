import pytest

from qfactor.qubo import QuboModel, build_direct, build_mc
from qfactor.refserver import ReferenceServer
from qfactor.samplers import (
    SamplerConnectionError,
    SamplerProtocolError,
    ServerRejection,
    remote_sample,
    solve_exhaustive,
)


@pytest.fixture(scope="module")
def server():
    with ReferenceServer() as srv:
        yield srv


def test_loopback_matches_exhaustive(server):
    for model, _ in (build_direct(25, 3, 3), build_direct(35, 3, 3)):
        ss = remote_sample(server.url, model, num_reads=100)
        emin, assignments = solve_exhaustive(model)
        assert ss.num_reads == 100
        assert sorted(r.assignment for r in ss.records) == assignments
        assert all(r.energy == emin for r in ss.records)
        assert ss.metadata["flagged_energy_mismatches"] == []


def test_loopback_matches_exhaustive_larger(server):
    model, _, _ = build_mc(35, 3, 3)  # 15 variables
    assert model.num_vars <= 20
    ss = remote_sample(server.url, model, num_reads=10)
    emin, assignments = solve_exhaustive(model)
    assert sorted(r.assignment for r in ss.records) <= assignments
    assert all(r.energy == emin for r in ss.records)


def test_malformed_response_raises_protocol_error(server):
    model, _ = build_direct(25, 3, 3)
    with pytest.raises(SamplerProtocolError):
        remote_sample(server.url, model, num_reads=5, params={"malformed": True})


def test_server_rejection_with_retry_after(server):
    model, _ = build_direct(25, 3, 3)
    with pytest.raises(ServerRejection) as exc:
        remote_sample(server.url, model, num_reads=5, params={"reject": "busy"})
    assert exc.value.retry_after == 1.0


def test_oversized_model_rejected(server):
    model, _ = build_direct(1042441, 10, 10)  # 80 variables
    with pytest.raises(ServerRejection):
        remote_sample(server.url, model, num_reads=5)


def test_energy_mismatch_flagged_local_value_kept(server):
    model, _ = build_direct(25, 3, 3)
    ss = remote_sample(server.url, model, num_reads=10,
                       params={"corrupt_energies": True})
    assert ss.metadata["flagged_energy_mismatches"] != []
    emin, _ = solve_exhaustive(model)
    assert all(r.energy == emin for r in ss.records)  # local values kept


def test_connection_error_is_typed():
    model, _ = build_direct(25, 3, 3)
    with pytest.raises(SamplerConnectionError):
        remote_sample("http://127.0.0.1:9", model, num_reads=1, retries=0,
                      timeout=2.0)
