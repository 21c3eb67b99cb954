"""One-way execution of a compiled geometry.

The procedure is: entangle the input state into the graph state, measure
every non-output qudit in the Fourier basis under a mode-dependent schedule,
and remove the byproducts with classically controlled corrections.

Two communication regimes are supported.

free:        all measurements share one logical step; measurement results go
             straight to the target nodes, which apply every correction on
             the output qudits (shift corrections built from the cascade of
             adjusted auxiliary outcomes, phase corrections from the
             dependence vectors kappa_u = A^T lambda_u).

constrained: classical data stays on the network.  Auxiliary qudits are
             measured in topological node order and their adjusted outcomes
             travel forward along the links; incoming-message qudits are
             measured in reverse topological order so each producing node
             can undo the phases on its own inputs (Z^tau with tau = V^T r)
             before those are measured in turn; finally the network inputs
             are measured and the residual phase is removed through a
             block-diagonal solution of M^T B M = 1 routed as a classical
             network code (or flagged as out-of-network traffic when no
             such B exists).

Sign conventions follow states.py: a Fourier outcome r on a qudit holding
basis value v multiplies the branch by w^(-r v), auxiliary outcomes leave a
shift deficit of r on the paired message qudit (fixed by X^{+r}), and an
uncorrected deficit delta on an input of a later node raises that node's
auxiliary outcomes by V[j,:] . delta, so adjusted outcomes are obtained by
subtracting the negated matrix row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import MbqcGeometry, label_sort_key
from .network import UnsupportedNetworkError
from .report import CorrectionRecord, MessageRecord, OutcomeRecord, RunReport
from .ring import RingMatrix, find_block_diagonal_B, left_inverse
from .states import LabeledRegister, QuditState, fidelity

__all__ = [
    "Measure",
    "Adjust",
    "Correct",
    "Send",
    "Stage",
    "Schedule",
    "build_schedule",
    "prepare_graph_state",
    "adjust_outcome",
    "target_z_correction",
    "run_mbqc",
    "exhaustive_mbqc",
    "oracle_output_state",
]


# ----------------------------------------------------------------------
# schedule structure
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Measure:
    qudit: str
    basis: str = "fourier"


@dataclass(frozen=True)
class Adjust:
    """adjusted(qudit) = raw(qudit) - sum coeff * adjusted(upstream) mod d."""

    qudit: str
    terms: tuple  # ((upstream_qudit, coeff), ...)


@dataclass(frozen=True)
class Correct:
    """Apply op^exponent to qudit, exponent = sum coeff * outcome(source)."""

    op: str  # "X" or "Z"
    qudit: str
    terms: tuple  # ((source_qudit, coeff, "raw" | "adjusted"), ...)


@dataclass(frozen=True)
class Send:
    sender: str
    receiver: str
    payload: tuple  # ("raw" | "adjusted" | "sigma-link" | "sigma-share", label)
    over_network: bool
    backward: bool = False


@dataclass
class Stage:
    name: str
    steps: list


@dataclass
class Schedule:
    mode: str
    stages: list

    def measurement_order(self):
        order = []
        for stage in self.stages:
            for step in stage.steps:
                if isinstance(step, Measure):
                    order.append(step.qudit)
        return order


# ----------------------------------------------------------------------
# plan construction
# ----------------------------------------------------------------------

@dataclass
class _Plan:
    geometry: MbqcGeometry
    mode: str
    local_aux: bool
    schedule: Schedule
    physical: list  # ("intro", gadget_idx) | ("measure", label, stage) | ("corr", Correct, stage)
    final_corrections: list  # (Correct, stage)
    adjust_terms: dict
    stage_of: dict
    matrix: RingMatrix
    block_B: RingMatrix | None
    requires_out_of_network: bool
    producer_node: dict
    consumer_node: dict
    source_node: dict
    link_of_message: dict


def _geometry_tables(geometry: MbqcGeometry):
    producer_node = {}
    consumer_node = {}
    source_node = {}
    for gadget in geometry.gadgets:
        for lab in gadget.out_labels:
            producer_node[lab] = gadget.node_id
        for lab in gadget.in_labels:
            if lab in geometry.inputs:
                source_node[lab] = gadget.node_id
            else:
                consumer_node[lab] = gadget.node_id
    return producer_node, consumer_node, source_node


def composite_of_geometry(geometry: MbqcGeometry) -> RingMatrix:
    rows = [geometry.depends[t] for t in geometry.outputs]
    return RingMatrix(np.asarray(rows, dtype=np.int64), geometry.d)


def geometry_counts(geometry: MbqcGeometry):
    k = len(geometry.inputs)
    ell = len(geometry.outputs)
    m = geometry.num_links
    nnz = sum(g.matrix.nnz() for g in geometry.gadgets)
    return {
        "qudits": k + 2 * ell + 2 * m,
        "entangling_ops": nnz + 2 * (m + ell),
        "classical_messages_extra": 2 * (m + ell),
        "cx_count_reference": nnz,
    }


def adjust_outcome(ledger, qudit, raw, upstream, terms, d, stage="adjust"):
    """Adjusted outcome raw - sum coeff*upstream mod d, recorded with provenance.

    `upstream` maps qudit labels to their (already adjusted) outcomes and
    `terms` is a sequence of (label, coeff).
    """
    acc = int(raw)
    for label, coeff in terms:
        acc -= int(coeff) * int(upstream[label])
    adjusted = acc % d
    ledger.append(
        OutcomeRecord(qudit=qudit, raw=int(raw) % d, adjusted=adjusted, stage=stage,
                      provenance=tuple((lab, int(c) % d) for lab, c in terms))
    )
    return adjusted


def target_z_correction(outcome, kappa, d):
    """Phase-correction exponents sigma = outcome * kappa mod d."""
    kappa = np.asarray(kappa, dtype=np.int64)
    return (int(outcome) * kappa) % d


def _aux_adjust_terms(geometry: MbqcGeometry, local_aux: bool):
    """Cascade coefficients: adjusted = raw - sum(-V[j,k]) * adjusted(producer aux)."""
    terms = {}
    link_labels = {f"m{i + 1}" for i in range(geometry.num_links)}
    for gadget in geometry.gadgets:
        V = gadget.matrix.a
        for j, aux in enumerate(gadget.aux_labels):
            if local_aux:
                terms[aux] = ()
                continue
            row = []
            for k_, in_lab in enumerate(gadget.in_labels):
                if in_lab in link_labels and V[j, k_]:
                    row.append((in_lab + "'", int(-V[j, k_]) % geometry.d))
            terms[aux] = tuple(row)
    return terms


def build_schedule(geometry: MbqcGeometry, mode, local_aux=False):
    """The logical schedule plus the executable plan for one geometry/mode."""
    if mode not in ("free", "constrained"):
        raise ValueError(f"unknown mode {mode!r}")
    if local_aux and mode == "free":
        raise ValueError("local auxiliary corrections only exist in constrained mode")
    d = geometry.d
    producer_node, consumer_node, source_node = _geometry_tables(geometry)
    link_labels = [f"m{i + 1}" for i in range(geometry.num_links)]
    link_of_message = {lab: i for i, lab in enumerate(link_labels)}

    M = composite_of_geometry(geometry)
    A = left_inverse(M)
    if A is None:
        raise UnsupportedNetworkError(
            f"composite map is not injective over Z_{d}; cannot run the one-way protocol"
        )

    adjust_terms = _aux_adjust_terms(geometry, local_aux)
    target_nodes = []
    for t in geometry.outputs:
        nid = producer_node[t]
        if nid not in target_nodes:
            target_nodes.append(nid)

    stages = []
    physical = []
    final_corrections = []
    stage_of = {}
    requires_oon = False
    block_B = None

    def owner(label):
        if label in source_node:
            return source_node[label]
        if label.endswith("'"):
            return producer_node[label.rstrip("'")]
        if label in consumer_node:
            return consumer_node[label]
        return producer_node[label]

    if mode == "free":
        measured = sorted(geometry.measured_labels(), key=label_sort_key)
        stages.append(Stage("measure", [Measure(q) for q in measured]))
        for q in measured:
            stage_of[q] = "measure"
        adjusts = []
        for gadget in geometry.gadgets:
            for aux in gadget.aux_labels:
                adjusts.append(Adjust(aux, adjust_terms[aux]))
        stages.append(Stage("adjust", adjusts))
        sends = [
            Send(owner(q), f"target {nid}", ("raw", q), over_network=False)
            for q in measured
            for nid in target_nodes
        ]
        stages.append(Stage("send", sends))

        corrections = []
        kappa = {}
        for u in geometry.message_like_labels():
            kappa[u] = (A.T.a @ geometry.depends[u]) % d
        for h, t in enumerate(geometry.outputs):
            corrections.append(Correct("X", t, ((t + "'", 1, "adjusted"),)))
            zterms = tuple(
                (u, int(kappa[u][h]), "raw")
                for u in sorted(kappa, key=label_sort_key)
                if kappa[u][h]
            )
            if zterms:
                corrections.append(Correct("Z", t, zterms))
        stages.append(Stage("correct", corrections))
        final_corrections = [(c, "correct") for c in corrections]

        # physical order: frontier sweep, measuring as soon as a qudit is idle
        for i, gadget in enumerate(geometry.gadgets):
            physical.append(("intro", i))
            for aux in sorted(gadget.aux_labels, key=label_sort_key):
                physical.append(("measure", aux, "measure"))
            for lab in sorted(gadget.in_labels, key=label_sort_key):
                physical.append(("measure", lab, "measure"))

    else:
        # phase A: auxiliary measurements in topological node order
        for i, gadget in enumerate(geometry.gadgets):
            nid = gadget.node_id
            name = f"aux-measure {nid}"
            auxs = sorted(gadget.aux_labels, key=label_sort_key)
            stages.append(Stage(name, [Measure(q) for q in auxs]))
            for q in auxs:
                stage_of[q] = name
            stages.append(
                Stage(f"aux-adjust {nid}", [Adjust(a, adjust_terms[a]) for a in auxs])
            )
            physical.append(("intro", i))
            for q in auxs:
                physical.append(("measure", q, name))
            if local_aux:
                name_x = f"x-correct {nid}"
                steps = []
                for j, out in enumerate(gadget.out_labels):
                    corr = Correct("X", out, ((gadget.aux_labels[j], 1, "adjusted"),))
                    steps.append(corr)
                    physical.append(("corr", corr, name_x))
                stages.append(Stage(name_x, steps))
            else:
                sends = []
                for j, out in enumerate(gadget.out_labels):
                    if out in link_of_message:
                        sends.append(
                            Send(nid, consumer_node[out], ("adjusted", gadget.aux_labels[j]),
                                 over_network=True)
                        )
                if sends:
                    stages.append(Stage(f"aux-send {nid}", sends))

        if not local_aux:
            steps = []
            for t in geometry.outputs:
                corr = Correct("X", t, ((t + "'", 1, "adjusted"),))
                steps.append(corr)
                final_corrections.append((corr, "x-correct"))
            stages.append(Stage("x-correct", steps))

        # phase B: incoming-message measurements in reverse topological order
        for gadget in reversed(geometry.gadgets):
            nid = gadget.node_id
            V = gadget.matrix.a
            zsteps = []
            for p, in_lab in enumerate(gadget.in_labels):
                terms = tuple(
                    (out, int(V[q, p]), "raw")
                    for q, out in enumerate(gadget.out_labels)
                    if out in link_of_message and V[q, p]
                )
                if terms:
                    corr = Correct("Z", in_lab, terms)
                    zsteps.append(corr)
                    physical.append(("corr", corr, f"z-correct {nid}"))
            if zsteps:
                stages.append(Stage(f"z-correct {nid}", zsteps))
            link_ins = sorted(
                (lab for lab in gadget.in_labels if lab in link_of_message),
                key=label_sort_key,
            )
            if link_ins:
                name = f"input-measure {nid}"
                stages.append(Stage(name, [Measure(q) for q in link_ins]))
                sends = []
                for q in link_ins:
                    stage_of[q] = name
                    physical.append(("measure", q, name))
                    sends.append(
                        Send(nid, producer_node[q], ("raw", q), over_network=True,
                             backward=True)
                    )
                stages.append(Stage(f"send-back {nid}", sends))

        # phase C: network-input measurements and the source phase correction
        name = "source-measure"
        src = sorted(geometry.inputs, key=label_sort_key)
        stages.append(Stage(name, [Measure(q) for q in src]))
        for q in src:
            stage_of[q] = name
            physical.append(("measure", q, name))

        by_node = {}
        for h, t in enumerate(geometry.outputs):
            by_node.setdefault(producer_node[t], []).append(h)
        blocks = [by_node[nid] for nid in target_nodes]
        block_B = find_block_diagonal_B(M, blocks)
        if block_B is not None:
            C = (block_B.T.a @ M.a) % d
            sends = [
                Send(producer_node[lab], consumer_node[lab], ("sigma-link", lab),
                     over_network=True)
                for lab in link_labels
            ]
            stages.append(Stage("sigma-route", sends))
        else:
            requires_oon = True
            C = A.T.a % d
            sends = []
            source_nodes = []
            for s in geometry.inputs:
                if source_node[s] not in source_nodes:
                    source_nodes.append(source_node[s])
            for snid in source_nodes:
                for tnid in target_nodes:
                    sends.append(
                        Send(snid, f"target {tnid}", ("sigma-share", snid),
                             over_network=False)
                    )
            stages.append(Stage("sigma-direct", sends))
        steps = []
        for h, t in enumerate(geometry.outputs):
            terms = tuple(
                (s, int(C[h, j]), "raw")
                for j, s in enumerate(geometry.inputs)
                if C[h, j]
            )
            if terms:
                corr = Correct("Z", t, terms)
                steps.append(corr)
                final_corrections.append((corr, "sigma-correct"))
        stages.append(Stage("sigma-correct", steps))

    schedule = Schedule(mode, stages)
    return _Plan(
        geometry=geometry,
        mode=mode,
        local_aux=local_aux,
        schedule=schedule,
        physical=physical,
        final_corrections=final_corrections,
        adjust_terms=adjust_terms,
        stage_of=stage_of,
        matrix=M,
        block_B=block_B,
        requires_out_of_network=requires_oon,
        producer_node=producer_node,
        consumer_node=consumer_node,
        source_node=source_node,
        link_of_message=link_of_message,
    )


# ----------------------------------------------------------------------
# execution
# ----------------------------------------------------------------------

def prepare_graph_state(geometry: MbqcGeometry, input_state: QuditState) -> QuditState:
    """Entangle the input state into the full graph state (all qudits live).

    Non-input qudits start in |+> and every edge contributes one cZ^weight.
    The returned register is ordered like geometry.qudits.
    """
    reg = _prepare_register(geometry, input_state, geometry.gadgets)
    return reg.extract([lab for lab, _ in geometry.qudits])


def _prepare_register(geometry, input_state, gadgets):
    if input_state.d != geometry.d or input_state.n != len(geometry.inputs):
        raise ValueError(
            f"input state must have {len(geometry.inputs)} qudits of dimension {geometry.d}"
        )
    reg = LabeledRegister(input_state, geometry.inputs)
    for gadget in gadgets:
        _introduce(reg, geometry, gadget)
    return reg


def _introduce(reg, geometry, gadget):
    """Add one node's auxiliary and outgoing message qudits, fully entangled."""
    fresh = []
    for j, out in enumerate(gadget.out_labels):
        fresh.append(gadget.aux_labels[j])
        fresh.append(out)
    reg.add(fresh, fill="plus")
    V = gadget.matrix.a
    d = geometry.d
    for j, aux in enumerate(gadget.aux_labels):
        for k_, in_lab in enumerate(gadget.in_labels):
            if V[j, k_]:
                reg.apply_cz(in_lab, aux, int(V[j, k_]))
        reg.apply_cz(aux, gadget.out_labels[j], d - 1)


class _Outcomes:
    """Raw and adjusted outcome store shared by driver and ledger."""

    def __init__(self, plan):
        self.plan = plan
        self.raw = {}
        self.adjusted = {}
        self.ledger = []

    def record(self, label, r, stage):
        d = self.plan.geometry.d
        self.raw[label] = r
        terms = self.plan.adjust_terms.get(label)
        if terms is None:
            self.adjusted[label] = r
            self.ledger.append(OutcomeRecord(label, r, r, stage))
        else:
            self.adjusted[label] = adjust_outcome(
                self.ledger, label, r, self.adjusted, terms, d, stage
            )

    def value(self, label, use):
        return self.raw[label] if use == "raw" else self.adjusted[label]

    def exponent(self, correct: Correct):
        d = self.plan.geometry.d
        return sum(c * self.value(lab, use) for lab, c, use in correct.terms) % d


def _resolve_forced(plan, forced):
    if forced is None:
        return None
    if isinstance(forced, dict):
        return dict(forced)
    order = plan.schedule.measurement_order()
    forced = list(forced)
    if len(forced) != len(order):
        raise ValueError(
            f"expected {len(order)} forced outcomes (one per measured qudit), got {len(forced)}"
        )
    return dict(zip(order, forced))


def _apply_correction(reg_or_state, outcomes, correct, stage, corrections):
    exp = outcomes.exponent(correct)
    if exp:
        if correct.op == "X":
            reg_or_state.apply_x(correct.qudit, exp)
        else:
            reg_or_state.apply_z(correct.qudit, exp)
    corrections.append(CorrectionRecord(correct.op, correct.qudit, int(exp), stage))


def _materialize_messages(plan, outcomes, sigma_link_values):
    messages = []
    for stage in plan.schedule.stages:
        for step in stage.steps:
            if not isinstance(step, Send):
                continue
            kind, label = step.payload
            if kind == "raw":
                text = f"outcome({label})={outcomes.raw[label]}"
            elif kind == "adjusted":
                text = f"adjusted({label})={outcomes.adjusted[label]}"
            elif kind == "sigma-link":
                text = f"sigma-share({label})={sigma_link_values.get(label, 0)}"
            else:
                text = f"sigma-contribution({label})"
            messages.append(
                MessageRecord(step.sender, step.receiver, text,
                              over_network=step.over_network, backward=step.backward)
            )
    return messages


def _classical_link_values(plan, s_values):
    """Forward run of the underlying classical code on the outcome vector s."""
    geometry = plan.geometry
    d = geometry.d
    values = {lab: int(s_values[lab]) for lab in geometry.inputs}
    for gadget in geometry.gadgets:
        x = np.asarray([values[lab] for lab in gadget.in_labels], dtype=np.int64)
        y = gadget.matrix.mul_vec(x)
        for j, out in enumerate(gadget.out_labels):
            values[out] = int(y[j])
    return values


def oracle_output_state(M: RingMatrix, input_state: QuditState) -> QuditState:
    """The target of every protocol: sum_x psi_x |M x> on the output qudits."""
    d = input_state.d
    k = input_state.n
    ell = M.rows
    out = np.zeros(d**ell, dtype=np.complex128)
    for idx, amp in enumerate(input_state.psi):
        if amp == 0:
            continue
        digits = np.asarray(
            [(idx // d ** (k - 1 - j)) % d for j in range(k)], dtype=np.int64
        )
        y = M.mul_vec(digits)
        out_idx = 0
        for v in y:
            out_idx = out_idx * d + int(v)
        out[out_idx] += amp
    return QuditState(ell, d, out, normalize_check=False)


def _validate_input(geometry, input_state):
    if input_state.d != geometry.d or input_state.n != len(geometry.inputs):
        raise ValueError(
            f"input state must have {len(geometry.inputs)} qudits of dimension {geometry.d}"
        )


def run_mbqc(
    geometry: MbqcGeometry,
    input_state: QuditState,
    mode="free",
    seed=None,
    forced=None,
    local_aux=False,
):
    """Execute the one-way procedure; returns (output QuditState, RunReport).

    Outcomes are sampled with `seed` unless `forced` pins them (a dict keyed
    by qudit label, or a sequence in schedule measurement order).  The output
    state is delivered on the geometry's outputs, in declaration order.
    """
    _validate_input(geometry, input_state)
    plan = build_schedule(geometry, mode, local_aux=local_aux)
    forced_map = _resolve_forced(plan, forced)
    rng = np.random.default_rng(seed) if seed is not None else None
    if forced_map is None and rng is None:
        raise ValueError("provide a seed for sampling or a forced outcome assignment")

    reg = LabeledRegister(input_state, plan.geometry.inputs)
    outcomes = _Outcomes(plan)
    corrections = []
    for op in plan.physical:
        if op[0] == "intro":
            _introduce(reg, plan.geometry, plan.geometry.gadgets[op[1]])
        elif op[0] == "measure":
            _, label, stage = op
            force = forced_map.get(label) if forced_map is not None else None
            r = reg.measure(label, rng=rng, force=force)
            outcomes.record(label, r, stage)
        else:
            _, correct, stage = op
            _apply_correction(reg, outcomes, correct, stage, corrections)

    sigma_link_values = {}
    if plan.mode == "constrained" and plan.block_B is not None:
        sigma_link_values = _classical_link_values(
            plan, {s: outcomes.raw[s] for s in plan.geometry.inputs}
        )
    for correct, stage in plan.final_corrections:
        _apply_correction(reg, outcomes, correct, stage, corrections)

    output_state = reg.extract(plan.geometry.outputs)
    oracle = oracle_output_state(plan.matrix, input_state)

    report = RunReport(
        path="mbqc",
        d=plan.geometry.d,
        mode=mode,
        seed=seed,
        forced_outcomes=None
        if forced_map is None
        else [[lab, int(forced_map[lab])] for lab in plan.schedule.measurement_order()],
        outcomes=outcomes.ledger,
        corrections=corrections,
        messages=_materialize_messages(plan, outcomes, sigma_link_values),
        resource_counts=geometry_counts(plan.geometry),
        requires_out_of_network=plan.requires_out_of_network,
        fidelity_vs_oracle=fidelity(output_state, oracle),
        depends={lab: row for lab, row in plan.geometry.depends.items()},
    )
    report.extra["local_aux"] = local_aux
    return output_state, report


def exhaustive_mbqc(
    geometry: MbqcGeometry,
    input_state: QuditState,
    mode="free",
    local_aux=False,
    amp_limit=2**22,
):
    """Iterate (outcome dict, output QuditState) over every measurement branch.

    Branches share prefix work: the walk introduces each node's qudits in
    protocol order and splits the live state into its d collapsed children at
    every measurement, so cost is near-linear in the number of branches and
    memory follows the live frontier, not the full qudit roster.  Branches
    whose probability underflows the impossible-outcome tolerance are skipped.
    """
    _validate_input(geometry, input_state)
    plan = build_schedule(geometry, mode, local_aux=local_aux)
    d = geometry.d
    ops = plan.physical

    def walk(state, axis, idx, outcomes):
        while idx < len(ops) and ops[idx][0] != "measure":
            op = ops[idx]
            if op[0] == "intro":
                gadget = geometry.gadgets[op[1]]
                grow = 2 * len(gadget.out_labels)
                if d ** (state.n + grow) > amp_limit:
                    raise MemoryError(
                        f"live register would need d^{state.n + grow} amplitudes, "
                        "above the enumeration limit"
                    )
                live = [lab for lab, _ax in sorted(axis.items(), key=lambda kv: kv[1])]
                reg = LabeledRegister(state, live)
                _introduce(reg, geometry, gadget)
                state, axis = reg.state, reg.axis
            else:
                _, correct, _stage = op
                exp = _branch_exponent(plan, correct, outcomes)
                if exp:
                    q = axis[correct.qudit]
                    state = (
                        state.apply_z(q, exp) if correct.op == "Z" else state.apply_x(q, exp)
                    )
            idx += 1
        if idx == len(ops):
            yield from _finish_branch(plan, state, axis, outcomes)
            return
        _, label, _stage = ops[idx]
        q = axis[label]
        new_axis = {
            lab: ax - 1 if ax > q else ax for lab, ax in axis.items() if lab != label
        }
        for r, (_p, child) in enumerate(state.fourier_branches(q)):
            if child is None:
                continue
            outcomes[label] = r
            yield from walk(child, new_axis, idx + 1, outcomes)
            del outcomes[label]

    start_axis = {lab: i for i, lab in enumerate(geometry.inputs)}
    yield from walk(input_state, start_axis, 0, {})


def _raw_coefficient_rows(plan, order):
    """Correction exponents as integer rows over the raw-outcome vector.

    The adjusted-outcome cascade is linear, so every correction exponent is a
    fixed integer combination of raw outcomes; expanding it once lets the
    branch scanner evaluate corrections with a dot product.
    """
    d = plan.geometry.d
    pos = {lab: i for i, lab in enumerate(order)}
    n = len(order)
    adj_rows = {}
    for gadget in plan.geometry.gadgets:
        for aux in gadget.aux_labels:
            row = np.zeros(n, dtype=np.int64)
            row[pos[aux]] = 1
            for lab, coeff in plan.adjust_terms[aux]:
                row = (row - coeff * adj_rows[lab]) % d
            adj_rows[aux] = row

    def row_of(correct):
        row = np.zeros(n, dtype=np.int64)
        for lab, coeff, use in correct.terms:
            if use == "raw":
                row[pos[lab]] = (row[pos[lab]] + coeff) % d
            else:
                row = (row + coeff * adj_rows[lab]) % d
        return row

    return row_of


def branch_survey(
    geometry: MbqcGeometry,
    input_state: QuditState,
    mode="free",
    local_aux=False,
    reference: QuditState | None = None,
    amp_limit=2**22,
):
    """Fidelity of every measurement branch against a reference state.

    Walks the full branch tree like exhaustive_mbqc but on bare arrays with
    correction exponents reduced to precomputed dot products, which keeps the
    per-branch overhead small enough to sweep millions of branches.  Returns
    (branch_count, min_fidelity); `reference` defaults to the oracle image of
    the input state.
    """
    _validate_input(geometry, input_state)
    plan = build_schedule(geometry, mode, local_aux=local_aux)
    d = geometry.d
    if reference is None:
        reference = oracle_output_state(plan.matrix, input_state)
    ref = reference.psi.reshape((d,) * len(geometry.outputs))

    order = [op[1] for op in plan.physical if op[0] == "measure"]
    pos = {lab: i for i, lab in enumerate(order)}
    row_of = _raw_coefficient_rows(plan, order)
    ops = []
    for op in plan.physical:
        if op[0] == "intro":
            ops.append(("intro", geometry.gadgets[op[1]]))
        elif op[0] == "measure":
            ops.append(("measure", op[1]))
        else:
            correct = op[1]
            ops.append(("corr", correct.op, correct.qudit, row_of(correct)))
    finals = [
        (correct.op, correct.qudit, row_of(correct))
        for correct, _stage in plan.final_corrections
    ]
    out_labels = geometry.outputs
    Finv = fourier_matrix_cached(d)
    plus_cache = {}
    rvec = np.zeros(len(order), dtype=np.int64)
    stats = {"count": 0, "min_fid": 1.0}

    def leaf(arr, axis, nrm2):
        perm = [axis[t] for t in out_labels]
        t = np.moveaxis(arr, perm, range(len(perm)))
        for opname, qudit, row in finals:
            exp = int(row @ rvec) % d
            if not exp:
                continue
            h = out_labels.index(qudit)
            if opname == "X":
                t = np.roll(t, exp, axis=h)
            else:
                shape = [d if i == h else 1 for i in range(len(out_labels))]
                t = t * _z_phases(d, exp).reshape(shape)
        fid = abs(np.vdot(ref, t)) / np.sqrt(nrm2)
        stats["count"] += 1
        if fid < stats["min_fid"]:
            stats["min_fid"] = fid

    def walk(arr, axis, nrm2, idx):
        while idx < len(ops):
            op = ops[idx]
            if op[0] == "measure":
                label = op[1]
                q = axis[label]
                branches = np.tensordot(Finv, arr, axes=([1], [q]))
                new_axis = {
                    lab: ax - 1 if ax > q else ax
                    for lab, ax in axis.items()
                    if lab != label
                }
                p = pos[label]
                for r in range(d):
                    child = branches[r]
                    child_nrm2 = float(np.vdot(child, child).real)
                    if child_nrm2 <= nrm2 * 1e-24:
                        continue
                    rvec[p] = r
                    walk(child, new_axis, child_nrm2, idx + 1)
                return
            if op[0] == "intro":
                gadget = op[1]
                grow = 2 * len(gadget.out_labels)
                if d ** (arr.ndim + grow) > amp_limit:
                    raise MemoryError("live register above the enumeration limit")
                arr, axis = _intro_array(arr, axis, gadget, d, plus_cache)
            else:
                _, opname, qudit, row = op
                exp = int(row @ rvec) % d
                if exp:
                    q = axis[qudit]
                    if opname == "X":
                        arr = np.roll(arr, exp, axis=q)
                    else:
                        shape = [d if i == q else 1 for i in range(arr.ndim)]
                        arr = arr * _z_phases(d, exp).reshape(shape)
            idx += 1
        leaf(arr, axis, nrm2)

    start_axis = {lab: i for i, lab in enumerate(geometry.inputs)}
    arr = input_state.psi.reshape((d,) * input_state.n)
    walk(arr, start_axis, 1.0, 0)
    return stats["count"], stats["min_fid"]


_Z_PHASE_CACHE = {}
_F_CACHE = {}


def _z_phases(d, exp):
    key = (d, exp % d)
    if key not in _Z_PHASE_CACHE:
        _Z_PHASE_CACHE[key] = np.exp(2j * np.pi * (exp % d) * np.arange(d) / d)
    return _Z_PHASE_CACHE[key]


def fourier_matrix_cached(d):
    if d not in _F_CACHE:
        from .states import fourier_matrix

        _F_CACHE[d] = fourier_matrix(d, inverse=True)
    return _F_CACHE[d]


def _intro_array(arr, axis, gadget, d, plus_cache):
    """Adjoin one gadget's |+> qudits to a bare array and entangle its edges."""
    grow = 2 * len(gadget.out_labels)
    if grow not in plus_cache:
        plus_cache[grow] = np.full((d,) * grow, d ** (-grow / 2), dtype=np.complex128)
    arr = np.multiply.outer(arr, plus_cache[grow])
    axis = dict(axis)
    base = arr.ndim - grow
    for j, out in enumerate(gadget.out_labels):
        axis[gadget.aux_labels[j]] = base + 2 * j
        axis[out] = base + 2 * j + 1
    V = gadget.matrix.a
    for j, aux in enumerate(gadget.aux_labels):
        for k_, in_lab in enumerate(gadget.in_labels):
            w = int(V[j, k_])
            if w:
                arr = arr * _cz_table(d, w, axis[in_lab], axis[aux], arr.ndim)
        arr = arr * _cz_table(d, d - 1, axis[aux], axis[gadget.out_labels[j]], arr.ndim)
    return arr, axis


def _cz_table(d, w, a, b, ndim):
    vals = np.arange(d)
    table = np.exp(2j * np.pi * (w % d) * np.outer(vals, vals) / d)
    shape = [d if i in (a, b) else 1 for i in range(ndim)]
    return table.reshape(shape)


def _branch_exponent(plan, correct, outcomes):
    d = plan.geometry.d
    adjusted_cache = {}

    def adjusted(label):
        if label in adjusted_cache:
            return adjusted_cache[label]
        acc = outcomes[label]
        for lab, coeff in plan.adjust_terms.get(label, ()):
            acc -= coeff * adjusted(lab)
        adjusted_cache[label] = acc % d
        return adjusted_cache[label]

    total = 0
    for lab, coeff, use in correct.terms:
        total += coeff * (outcomes[lab] if use == "raw" else adjusted(lab))
    return total % d


def _finish_branch(plan, state, axis, outcomes):
    d = plan.geometry.d
    outs = plan.geometry.outputs
    order = [axis[t] for t in outs]
    t = np.moveaxis(state._tensor(), order, range(len(order)))
    out_state = QuditState(len(outs), d, t, normalize_check=False)
    for correct, _stage in plan.final_corrections:
        exp = _branch_exponent(plan, correct, outcomes)
        if exp:
            q = outs.index(correct.qudit)
            out_state = (
                out_state.apply_z(q, exp) if correct.op == "Z" else out_state.apply_x(q, exp)
            )
    yield dict(outcomes), out_state
