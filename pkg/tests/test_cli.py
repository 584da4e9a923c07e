import json
import math

import numpy as np

from conveyorqc.cli import main
from conveyorqc.compiler import permutation_after, permute_logical
from conveyorqc.oracle import compare_up_to_global_phase
from conveyorqc.state import (
    PhaseLabel,
    PureState,
    decode_well_formed,
    random_logical_state,
    state_csv_lines,
)
from conveyorqc.topology import load


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(out[-1])


def read_state_csv(path, n_qubits):
    amp = np.zeros(1 << n_qubits, dtype=complex)
    for line in open(path).read().splitlines()[1:]:
        idx, re, im = line.split(",")
        amp[int(idx, 16)] = float(re) + 1j * float(im)
    return PureState(n_qubits, amp)


def test_topology_command(tmp_path, capsys):
    out = tmp_path / "topo.json"
    code, report = run_cli(capsys, "topology", "--n", "8", "--out", str(out))
    assert code == 0 and report["n_sites"] == 33
    topo = load(out)
    assert topo.n_logical == 8

    code, report = run_cli(capsys, "topology", "--n", "5", "--out", str(tmp_path / "x.json"))
    assert code == 2 and report["status"] == "error" and "even" in report["error"]

    code, report = run_cli(
        capsys,
        "topology",
        "--n",
        "8",
        "--variant",
        "two_coupler_three_species",
        "--out",
        str(tmp_path / "v.json"),
    )
    assert code == 0
    variant = load(tmp_path / "v.json")
    assert variant.coupler_pairs and variant.n_sites == 34


def test_run_init_then_decode(tmp_path, capsys):
    topo_file = tmp_path / "topo.json"
    run_cli(capsys, "topology", "--n", "4", "--out", str(topo_file))
    sched = tmp_path / "init.txt"
    sched.write_text("MACRO INIT\n")
    out = tmp_path / "state.csv"
    code, report = run_cli(
        capsys, "run", "--topology", str(topo_file), "--schedule", str(sched), "--out", str(out)
    )
    assert code == 0 and report["pulse_count"] == 1
    assert report["residual"] < 1e-12 and report["closest_phase"] == "FP"
    state = read_state_csv(out, 17)
    dec, phase, _ = decode_well_formed(state, load(topo_file))
    assert phase is PhaseLabel.FP
    assert abs(abs(dec.amplitudes[0]) - 1) < 1e-12


def test_run_exchange_on_logical_state(tmp_path, capsys):
    topo_file = tmp_path / "topo.json"
    run_cli(capsys, "topology", "--n", "4", "--out", str(topo_file))
    psi = random_logical_state(4, np.random.default_rng(5))
    psi_file = tmp_path / "psi.csv"
    psi_file.write_text(
        "\n".join(state_csv_lines(PureState(4, psi.amplitudes))) + "\n"
    )
    sched = tmp_path / "exc.txt"
    sched.write_text("MACRO EXC\n")
    out = tmp_path / "state.csv"
    code, report = run_cli(
        capsys,
        "run",
        "--topology",
        str(topo_file),
        "--schedule",
        str(sched),
        "--initial-state",
        str(psi_file),
        "--phase",
        "FP",
        "--backend",
        "sparse",
        "--out",
        str(out),
    )
    assert code == 0 and report["closest_phase"] == "PF" and report["residual"] < 1e-10
    state = read_state_csv(out, 17)
    dec, phase, _ = decode_well_formed(state, load(topo_file))
    assert phase is PhaseLabel.PF
    expected = permute_logical(psi, permutation_after(1, PhaseLabel.FP, 4))
    fid, _ = compare_up_to_global_phase(expected, dec)
    assert fid >= 1 - 1e-10


def test_run_empty_schedule_echoes_input(tmp_path, capsys):
    topo_file = tmp_path / "topo.json"
    run_cli(capsys, "topology", "--n", "4", "--out", str(topo_file))
    sched = tmp_path / "empty.txt"
    sched.write_text("# nothing\n")
    out = tmp_path / "state.csv"
    code, _ = run_cli(
        capsys, "run", "--topology", str(topo_file), "--schedule", str(sched), "--out", str(out)
    )
    assert code == 0
    state = read_state_csv(out, 17)
    assert state.amplitudes[0] == 1.0 and np.count_nonzero(state.amplitudes) == 1


def test_compile_and_verify(tmp_path, capsys):
    circ = tmp_path / "circ.txt"
    circ.write_text("X q=3\nCNOT a=1 b=2\n")
    sched = tmp_path / "sched.txt"
    code, report = run_cli(
        capsys, "compile", "--circuit", str(circ), "--n", "4", "--out", str(sched)
    )
    assert code == 0 and report["pulse_count"] > 0
    text = sched.read_text()
    assert "# final_placement:" in text and "# pulses:" in text

    code, report = run_cli(
        capsys, "verify", "--circuit", str(circ), "--n", "4", "--seed", "3", "--trials", "2"
    )
    assert code == 0 and report["min_fidelity"] >= 1 - 1e-8

    # verifying the compiled file (placement read from the trailer)
    code, report = run_cli(
        capsys,
        "verify",
        "--circuit",
        str(circ),
        "--n",
        "4",
        "--schedule",
        str(sched),
        "--seed",
        "3",
        "--trials",
        "2",
    )
    assert code == 0 and report["min_fidelity"] >= 1 - 1e-8


def test_verify_flags_corrupted_schedule(tmp_path, capsys):
    circ = tmp_path / "circ.txt"
    circ.write_text("X q=1\n")
    sched = tmp_path / "sched.txt"
    run_cli(capsys, "compile", "--circuit", str(circ), "--n", "4", "--out", str(sched))
    lines = sched.read_text().splitlines()
    lines[lines.index("MACRO EXC")] = f"PULSE B_all theta={math.pi:.17g} axis=1,0,0"
    sched.write_text("\n".join(lines) + "\n")
    code, report = run_cli(
        capsys,
        "verify",
        "--circuit",
        str(circ),
        "--n",
        "4",
        "--schedule",
        str(sched),
        "--seed",
        "0",
        "--trials",
        "2",
    )
    assert code == 1 and report["status"] == "below_threshold"
    assert report["min_fidelity"] < 1 - 1e-8


def test_verify_empty_circuit(tmp_path, capsys):
    circ = tmp_path / "empty.txt"
    circ.write_text("")
    code, report = run_cli(
        capsys, "verify", "--circuit", str(circ), "--n", "4", "--trials", "2"
    )
    assert code == 0 and report["min_fidelity"] >= 1 - 1e-12


def test_verify_seed_determinism(tmp_path, capsys):
    circ = tmp_path / "circ.txt"
    circ.write_text("H q=2\n")
    _, r1 = run_cli(capsys, "verify", "--circuit", str(circ), "--n", "4", "--seed", "9")
    _, r2 = run_cli(capsys, "verify", "--circuit", str(circ), "--n", "4", "--seed", "9")
    assert r1["fidelities"] == r2["fidelities"] and r1["seed"] == 9


def test_blockade_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, report = run_cli(
        capsys, "blockade-sweep", "--etas", "4,8", "--fragment", "two_neighbor", "--out", str(out)
    )
    assert code == 0 and report["rows"] == 2
    lines = out.read_text().splitlines()
    assert lines[0] == "eta,p_flip_gg,p_leak_ge,p_leak_ee"
    assert len(lines) == 3
