import itertools
import json

import numpy as np
import pytest

from cutprop.circuits import Circuit, Gate, lower_rotations
from cutprop.cutting import (
    CutError,
    CutPlan,
    cost,
    extract_subcircuits,
    find_cuts,
    interaction_graph,
    total_executions,
    validate_plan,
)
from cutprop.generators import random_circuit, weight_z_observable
from cutprop.paulis import Observable, PauliString, canonicalize


def ladder(n, kind="cz", per_edge=1):
    gates = []
    for _ in range(per_edge):
        for q in range(n - 1):
            gates.append(Gate(kind, (q, q + 1)))
    return Circuit(n, tuple(gates))


# --- interaction graph ---------------------------------------------------------


def test_interaction_graph_path():
    g = interaction_graph(ladder(4))
    assert g == {(0, 1): 1, (1, 2): 1, (2, 3): 1}


def test_interaction_graph_no_two_qubit_gates():
    circ = Circuit(3, (Gate("h", (0,)), Gate("rz", (1,), angle=0.3)))
    assert interaction_graph(circ) == {}


def test_interaction_graph_weights_accumulate():
    circ = Circuit(2, (Gate("cx", (0, 1)), Gate("cx", (0, 1))))
    assert interaction_graph(circ) == {(0, 1): 2}


# --- cost accounting -------------------------------------------------------------


def test_cost_formula_reference_values():
    assert total_executions(kg=2, kw=1, groups=1) == 1296
    assert total_executions(kg=1, kw=1, groups=2) == 288
    assert total_executions(kg=0, kw=0, groups=1) == 1


def test_cost_monotone_in_each_argument():
    base = total_executions(1, 1, 2)
    assert total_executions(2, 1, 2) > base
    assert total_executions(1, 2, 2) > base
    assert total_executions(1, 1, 3) > base


def test_cost_uses_grouping_of_observable():
    circ = ladder(3)
    plan = find_cuts(circ, force_bipartition=True)
    obs = Observable.from_labels(
        [(1.0, "IZI"), (1.0, "IIZ"), (1.0, "ZII"), (1.0, "IXZ"), (1.0, "IZX")]
    )
    report = cost(plan, obs)
    assert report.groups == 2
    assert report.total_executions == 2 * 9**report.kg * 16**report.kw


def test_cost_per_subcircuit_mode():
    circ = ladder(3)
    plan = find_cuts(circ, force_bipartition=True)
    obs = weight_z_observable(3, 1)
    report = cost(plan, obs, per_subcircuit=True, circuit=circ)
    assert report.per_subcircuit is not None
    assert len(report.per_subcircuit) == 2
    for _, g_i, eta in report.per_subcircuit:
        assert g_i >= 1 and eta >= 1


# --- find_cuts -------------------------------------------------------------------


def test_disconnected_circuit_zero_cuts():
    circ = Circuit(4, (Gate("cx", (0, 1)), Gate("cz", (2, 3))))
    plan = find_cuts(circ, force_bipartition=True)
    assert plan.kg == 0 and plan.kw == 0
    assert plan.num_subcircuits == 2
    validate_plan(circ, plan)


def test_path_single_gate_cut():
    plan = find_cuts(ladder(3), force_bipartition=True)
    assert (plan.kg, plan.kw) == (1, 0)
    assert total_executions(plan.kg, plan.kw, 1) == 9


def test_wire_cut_beats_two_gate_cuts():
    # qubit 2 talks to block {0,1} twice early and block {3,4,5} twice
    # late, so any bipartition leaves it with 2 crossing gates (81) while
    # one wire cut between the halves costs 16.
    gates = (
        Gate("cz", (0, 1)),
        Gate("cz", (0, 2)),
        Gate("cz", (1, 2)),
        Gate("cz", (2, 3)),
        Gate("cz", (2, 4)),
        Gate("cz", (3, 4)),
        Gate("cz", (3, 5)),
        Gate("cz", (4, 5)),
    )
    circ = Circuit(6, gates)
    plan = find_cuts(circ, force_bipartition=True)
    assert (plan.kg, plan.kw) == (0, 1)
    assert plan.wire_cuts[0][0] == 2
    assert 9**plan.kg * 16**plan.kw == brute_force_minimum(circ)
    validate_plan(circ, plan)


def brute_force_minimum(circ):
    """Exhaustive scan of the declared plan space: every bipartition label
    vector crossed with every combination of at-most-one wire cut per
    qubit, where a cut must fall strictly inside the qubit's interaction
    timeline (anything else merely relabels the wire)."""
    n = circ.n
    gates2q = [(t, g.qubits[0], g.qubits[1]) for t, g in enumerate(circ.gates) if len(g.qubits) == 2]
    positions = {
        q: sorted({t for t, u, v in gates2q if q in (u, v)})[1:] for q in range(n)
    }

    def crossing(labels, cuts):
        k = 0
        for t, u, v in gates2q:
            lu = labels[u] ^ (1 if u in cuts and t >= cuts[u] else 0)
            lv = labels[v] ^ (1 if v in cuts and t >= cuts[v] else 0)
            k += lu != lv
        return k

    best = None
    for bits in range(1, 1 << (n - 1)):
        labels = [((bits >> (q - 1)) & 1) if q else 0 for q in range(n)]
        options = [[None] + positions[q] for q in range(n)]
        for combo in itertools.product(*options):
            cuts = {q: p for q, p in enumerate(combo) if p is not None}
            c = 9 ** crossing(labels, cuts) * 16 ** len(cuts)
            if best is None or c < best:
                best = c
    return best


def test_optimizer_matches_brute_force_on_small_corpus():
    corpus = [ladder(3), ladder(4), ladder(3, per_edge=2)]
    for trial in range(5):
        rng = np.random.default_rng((55, trial))
        n = int(rng.integers(3, 6))
        corpus.append(lower_rotations(random_circuit(n, int(rng.integers(4, 10)), rng)))
    for circ in corpus:
        if not interaction_graph(circ):
            continue
        plan = find_cuts(circ, force_bipartition=True)
        got = 9**plan.kg * 16**plan.kw
        assert got == brute_force_minimum(circ), circ


def test_find_cuts_deterministic_tie_break():
    circ = ladder(4)
    p1 = find_cuts(circ, force_bipartition=True, seed=0)
    p2 = find_cuts(circ, force_bipartition=True, seed=0)
    assert p1 == p2


def test_max_qubits_recursive_split():
    circ = ladder(6)
    plan = find_cuts(circ, max_qubits=2)
    validate_plan(circ, plan)
    sizes = {}
    for q in range(6):
        for seg_label in {plan.segment_label(q, t) for t in range(len(circ.gates) + 1)}:
            sizes.setdefault(seg_label, set()).add(q)
    assert all(len(v) <= 2 for v in sizes.values())
    assert plan.num_subcircuits >= 3


def test_constraint_errors():
    with pytest.raises(CutError):
        find_cuts(Circuit(1, ()), force_bipartition=True)
    with pytest.raises(CutError):
        find_cuts(ladder(3), max_qubits=0)
    with pytest.raises(CutError):
        find_cuts(ladder(3), max_qubits=2, force_bipartition=True)


def test_annealed_search_path():
    # above the exhaustive width limit; a chain still cuts with one gate
    circ = ladder(16)
    plan = find_cuts(circ, force_bipartition=True, seed=7)
    validate_plan(circ, plan)
    assert 9**plan.kg * 16**plan.kw == 9


# --- plan validation and serialization -----------------------------------------


def test_validate_rejects_uncut_crossing_gate():
    circ = ladder(3)
    bad = CutPlan(3, (0, 1, 1), (), (), 2)
    with pytest.raises(CutError, match="crosses"):
        validate_plan(circ, bad)


def test_validate_rejects_phantom_gate_cut():
    circ = ladder(3)
    bad = CutPlan(3, (0, 0, 0), (), (0,), 1)
    with pytest.raises(CutError):
        validate_plan(circ, bad)


def test_plan_json_roundtrip():
    plan = find_cuts(ladder(4), force_bipartition=True)
    again = CutPlan.from_dict(json.loads(json.dumps(plan.to_dict())))
    assert again == plan


def test_plan_from_dict_rejects_garbage():
    with pytest.raises(CutError):
        CutPlan.from_dict({"nonsense": True})


# --- extraction ------------------------------------------------------------------


def test_extract_disconnected_components_verbatim():
    circ = Circuit(4, (Gate("cx", (0, 1)), Gate("h", (0,)), Gate("cz", (2, 3))))
    plan = find_cuts(circ, force_bipartition=True)
    obs = weight_z_observable(4, 1)
    ext = extract_subcircuits(circ, plan, obs)
    assert len(ext.subcircuits) == 2
    kinds = sorted(tuple(op.gate.kind for op in sub.ops) for sub in ext.subcircuits)
    assert kinds == [("cx", "h"), ("cz",)]
    assert not ext.gate_cut_infos and not ext.wire_cut_infos


def test_extract_gate_cut_placeholders():
    circ = Circuit(2, (Gate("h", (0,)), Gate("cz", (0, 1))))
    plan = CutPlan(2, (0, 1), (), (1,), 2)
    ext = extract_subcircuits(circ, plan, weight_z_observable(2, 1))
    assert len(ext.gate_cut_infos) == 1
    for sub in ext.subcircuits:
        assert sub.n == 1
        assert any(op.kind == "gatecut" for op in sub.ops)


def test_extract_subobservables_tensor_back():
    rng = np.random.default_rng(71)
    circ = lower_rotations(random_circuit(5, 14, rng))
    plan = find_cuts(circ, force_bipartition=True)
    obs = canonicalize(
        Observable.from_labels([(0.5, "ZZIXI"), (0.25, "IYIIZ"), (-0.75, "XIIII")])
    )
    ext = extract_subcircuits(circ, plan, obs)
    for k, term in enumerate(obs.terms):
        x = z = 0
        for pi, sub in enumerate(ext.subcircuits):
            w = ext.subobservables[pi][k]
            for local, (q, seg) in enumerate(sub.wire_origin):
                x |= ((w.x >> local) & 1) << q
                z |= ((w.z >> local) & 1) << q
        assert PauliString(5, x, z) == term.word
        assert ext.term_coeffs[k] == term.coeff


def test_plan_split_graph_components_respect_parts():
    # after deleting cut gates and splitting cut wires, every connected
    # component of the wire-interaction graph lives inside one part
    for trial in range(6):
        rng = np.random.default_rng((140, trial))
        circ = lower_rotations(random_circuit(6, 16, rng, p_two_qubit=0.35))
        if not interaction_graph(circ):
            continue
        plan = find_cuts(circ, force_bipartition=True)
        cuts_by_qubit = {}
        for q, pos, new in plan.wire_cuts:
            cuts_by_qubit.setdefault(q, []).append(pos)

        def wire(q, t):
            return (q, sum(1 for p in cuts_by_qubit.get(q, []) if t >= p))

        nodes = {(q, 0) for q in range(circ.n)}
        for q, posns in cuts_by_qubit.items():
            nodes.update((q, k + 1) for k in range(len(posns)))
        adj = {w: set() for w in nodes}
        for t, g in enumerate(circ.gates):
            if len(g.qubits) == 2 and t not in plan.gate_cuts:
                wu, wv = wire(g.qubits[0], t), wire(g.qubits[1], t)
                adj[wu].add(wv)
                adj[wv].add(wu)
        def wire_label(q, seg):
            return plan.labels[q] if seg == 0 else plan.segment_label(
                q, cuts_by_qubit[q][seg - 1]
            )

        seen = set()
        components = 0
        for start in sorted(nodes):
            if start in seen:
                continue
            components += 1
            stack, labels_here = [start], set()
            while stack:
                w = stack.pop()
                if w in seen:
                    continue
                seen.add(w)
                labels_here.add(wire_label(*w))
                stack.extend(adj[w])
            assert len(labels_here) == 1
        assert components >= plan.num_subcircuits


def test_annealed_search_finds_known_community_cut():
    # two dense 8/9-qubit blocks joined by a single interaction: the
    # annealed path (width > 14) must find the one-gate-cut partition
    gates = []
    for block in (range(0, 8), range(8, 17)):
        qubits = list(block)
        for i in range(len(qubits) - 1):
            gates.append(Gate("cz", (qubits[i], qubits[i + 1])))
            gates.append(Gate("cx", (qubits[0], qubits[i + 1])))
    gates.append(Gate("cz", (7, 8)))
    circ = Circuit(17, tuple(gates))
    plan = find_cuts(circ, force_bipartition=True, seed=11)
    validate_plan(circ, plan)
    assert 9**plan.kg * 16**plan.kw == 9
    assert set(plan.gate_cuts) == {len(circ.gates) - 1}
